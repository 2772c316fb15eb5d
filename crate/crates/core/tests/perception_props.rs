mod common;

use clothslide::perception::{classify, estimate_pose_classical, pose_errors};
use clothslide::render::{
    render_class_sample, render_edge, ClothSide, EdgeAnnotation, SampleOptions,
};
use clothslide::{ContactClass, EdgePose, RenderParams, TactileImage, TactileSequence};
use proptest::prelude::*;

/// Moves image content by `(dc, dr)` pixels, replicating the border.
fn shift_image(img: &TactileImage, dc: i64, dr: i64) -> TactileImage {
    let (w, h) = (img.width as i64, img.height as i64);
    let mut px = Vec::with_capacity(img.len());
    for r in 0..h {
        for c in 0..w {
            let sc = (c - dc).clamp(0, w - 1) as usize;
            let sr = (r - dr).clamp(0, h - 1) as usize;
            px.push(img.get(sc, sr));
        }
    }
    TactileImage::new(img.width, img.height, img.mm_per_px, px).unwrap()
}

fn edge_image(pose: EdgePose, side: ClothSide) -> TactileImage {
    let ann = EdgeAnnotation {
        pose,
        cloth_side: side,
    };
    render_edge(&ann, &RenderParams::default(), 64, 52, 0.3).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn uniform_contact_classes_survive_small_shifts(
        in_fabric in any::<bool>(),
        seed in any::<u64>(),
        dc in -2i64..=2,
        dr in -2i64..=2,
    ) {
        let models = common::models();
        let cls = if in_fabric { ContactClass::InFabric } else { ContactClass::GraspFailure };
        let s = render_class_sample(cls, &RenderParams::default(), seed, &SampleOptions::default()).unwrap();
        let shifted = TactileSequence::new(s.sequence.frames().iter().map(|f| shift_image(f, dc, dr)).collect()).unwrap();
        let (original, _) = classify(&models.classifier, &s.sequence);
        let (moved, _) = classify(&models.classifier, &shifted);
        prop_assert_eq!(original, cls);
        prop_assert_eq!(moved, cls);
    }

    #[test]
    fn class_scores_form_a_distribution(cls_index in 0usize..4, seed in any::<u64>(), noise in 0.0f64..0.2) {
        let models = common::models();
        let params = RenderParams { noise_sigma: noise, seed, ..RenderParams::default() };
        let cls = ContactClass::ALL[cls_index];
        let s = render_class_sample(cls, &params, seed, &SampleOptions::default()).unwrap();
        let (_, scores) = classify(&models.classifier, &s.sequence);
        prop_assert!((scores.iter().sum::<f64>() - 1.0).abs() <= 1e-9);
        prop_assert!(scores.iter().all(|p| (0.0..=1.0).contains(p)));
    }

    #[test]
    fn classical_estimate_follows_x_shifts(
        x in -3.0f64..3.0,
        y in -3.0f64..3.0,
        theta in -1.5f64..1.5,
        dx in -2.0f64..2.0,
        left in any::<bool>(),
    ) {
        let side = if left { ClothSide::LeftOfEdge } else { ClothSide::RightOfEdge };
        let p = EdgePose::new(x, y, theta);
        let q = EdgePose::new(x + dx, y, theta);
        let a = estimate_pose_classical(&edge_image(p, side)).unwrap();
        let b = estimate_pose_classical(&edge_image(q, side)).unwrap();
        // The canonical foot point of a line moved by dx along x moves by
        // (dx sin^2, -dx sin cos).
        let (s, c) = theta.sin_cos();
        let expected = EdgePose::new(a.x + dx * s * s, a.y - dx * s * c, a.theta);
        let err = pose_errors(&b, &expected);
        prop_assert!(err.distance_mm < 0.5, "moved {:?} -> {:?}, err {:?}", a, b, err);
    }
}

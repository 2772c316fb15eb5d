use clothslide::geometry::line_angle_error;
use clothslide::render::{render_class_sample, Closure, SampleOptions, CONTACT_THRESHOLD};
use clothslide::{ContactClass, EdgePose, RenderParams, TactileImage, Texture};
use proptest::prelude::*;

/// Line through the sub-pixel crossings of `level`, by principal axes.
fn fit_threshold_line(img: &TactileImage, level: f64) -> Option<EdgePose> {
    let mut pts = Vec::new();
    let mut crossing = |c0: usize, r0: usize, c1: usize, r1: usize| {
        let (a, b) = (img.get(c0, r0) - level, img.get(c1, r1) - level);
        if a * b < 0.0 {
            let t = a / (a - b);
            let p = img.pixel_to_sensor(c0, r0);
            let q = img.pixel_to_sensor(c1, r1);
            pts.push((p.x + t * (q.x - p.x), p.y + t * (q.y - p.y)));
        }
    };
    for r in 0..img.height {
        for c in 0..img.width {
            if c + 1 < img.width {
                crossing(c, r, c + 1, r);
            }
            if r + 1 < img.height {
                crossing(c, r, c, r + 1);
            }
        }
    }
    if pts.len() < 10 {
        return None;
    }
    let n = pts.len() as f64;
    let (mx, my) = pts
        .iter()
        .fold((0.0, 0.0), |s, p| (s.0 + p.0 / n, s.1 + p.1 / n));
    let (mut sxx, mut syy, mut sxy) = (0.0, 0.0, 0.0);
    for &(x, y) in &pts {
        sxx += (x - mx) * (x - mx);
        syy += (y - my) * (y - my);
        sxy += (x - mx) * (y - my);
    }
    let theta = 0.5 * (2.0 * sxy).atan2(sxx - syy);
    Some(EdgePose::new(mx, my, theta).canonical())
}

fn texture() -> impl Strategy<Value = Texture> {
    prop::sample::select(Texture::ALL.to_vec())
}

fn class() -> impl Strategy<Value = ContactClass> {
    prop::sample::select(ContactClass::ALL.to_vec())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn edge_labels_match_rendered_edge(
        seed in any::<u64>(),
        tex in texture(),
        amplitude in 0.0f64..0.3,
        softness in 0.3f64..0.8,
        steady in any::<bool>(),
    ) {
        let params = RenderParams { texture: tex, texture_amplitude: amplitude, contact_softness_mm: softness, noise_sigma: 0.0, seed, ..RenderParams::default() };
        let opts = SampleOptions { closure: if steady { Closure::Steady } else { Closure::Grasp }, ..SampleOptions::default() };
        let s = render_class_sample(ContactClass::Edge, &params, seed ^ 0x5a5a, &opts).unwrap();
        let label = s.pose.expect("edge samples carry a pose");
        let fit = fit_threshold_line(s.sequence.last(), CONTACT_THRESHOLD).expect("edge visible");
        let dist = (fit.x - label.x).hypot(fit.y - label.y);
        let angle = line_angle_error(fit.theta, label.theta).to_degrees();
        prop_assert!(dist < 1.0, "distance {dist}");
        prop_assert!(angle < 3.0, "angle {angle}");
    }

    #[test]
    fn rendered_intensities_stay_in_unit_interval(
        cls in class(),
        seed in any::<u64>(),
        tex in texture(),
        amplitude in 0.0f64..=1.0,
        noise_share in 0.0f64..=1.0,
        softness in 0.1f64..=5.0,
        contact in 0.0f64..=1.0,
        background in 0.0f64..=1.0,
    ) {
        let params = RenderParams {
            texture: tex,
            texture_amplitude: amplitude,
            noise_sigma: (1.0 - amplitude) * noise_share,
            contact_softness_mm: softness,
            contact_intensity: contact,
            background_intensity: background,
            seed,
        };
        prop_assume!(params.validate().is_ok());
        let s = render_class_sample(cls, &params, seed.rotate_left(17), &SampleOptions::default()).unwrap();
        for frame in s.sequence.frames() {
            prop_assert!(frame.pixels.iter().all(|&v| (0.0..=1.0).contains(&v)));
        }
    }

    #[test]
    fn texture_seed_never_changes_labels(cls in class(), geometry_seed in any::<u64>(), a in any::<u64>(), b in any::<u64>(), tex in texture()) {
        let params = RenderParams { texture: tex, texture_amplitude: 0.3, noise_sigma: 0.1, ..RenderParams::default() };
        let opts = SampleOptions::default();
        let sa = render_class_sample(cls, &params.with_seed(a), geometry_seed, &opts).unwrap();
        let sb = render_class_sample(cls, &params.with_seed(b), geometry_seed, &opts).unwrap();
        prop_assert_eq!(sa.class, sb.class);
        prop_assert_eq!(sa.pose, sb.pose);
    }
}

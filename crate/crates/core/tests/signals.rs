use proptest::prelude::*;

use selfcal_core::signals::{
    audio_windows, normalize_sketch, project_2d, sketch_features, AudioClip, Polyline, ProjectionMethod,
};

fn features(points: &[[f64; 2]]) -> Vec<f64> {
    let p = Polyline::new(points.to_vec()).unwrap();
    sketch_features(&normalize_sketch(&p).unwrap()).to_vec()
}

fn stroke() -> impl Strategy<Value = Vec<[f64; 2]>> {
    prop::collection::vec([-50.0f64..50.0, -50.0f64..50.0], 2..30)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(500))]

    #[test]
    fn sketch_features_ignore_position_and_size(
        points in stroke(),
        shift in [-1000.0f64..1000.0, -1000.0f64..1000.0],
        scale in 0.01f64..100.0,
    ) {
        let moved: Vec<[f64; 2]> = points.iter().map(|p| [p[0] * scale + shift[0], p[1] * scale + shift[1]]).collect();
        let a = features(&points);
        let b = features(&moved);
        prop_assert_eq!(a.len(), 17);
        for (x, y) in a.iter().zip(&b) {
            prop_assert!((x - y).abs() <= 1e-9, "{:?} vs {:?}", a, b);
        }
    }

    #[test]
    fn normalized_strokes_fill_the_unit_square(points in stroke()) {
        let f = features(&points);
        prop_assert!(f[..4].iter().all(|v| (-1.0 - 1e-12..=1.0 + 1e-12).contains(v)));
        prop_assert!(f[4..6].iter().all(|v| (-2.0 - 1e-12..=2.0 + 1e-12).contains(v)));
        let grid = &f[8..];
        prop_assert!(grid.iter().all(|g| *g >= 0.0));
        prop_assert!((grid.iter().sum::<f64>() - 1.0).abs() <= 1e-9);
        prop_assert!(f[7] >= f[6] - 1e-12, "path shorter than the chord");
    }

    #[test]
    fn two_dimensional_projection_keeps_distances(rows in prop::collection::vec([-10.0f64..10.0, -10.0f64..10.0], 1..40)) {
        let out = project_2d(&rows, &ProjectionMethod::PrincipalComponents).unwrap();
        for i in 0..rows.len() {
            for j in 0..i {
                let d_in = ((rows[i][0] - rows[j][0]).powi(2) + (rows[i][1] - rows[j][1]).powi(2)).sqrt();
                let d_out = ((out[i][0] - out[j][0]).powi(2) + (out[i][1] - out[j][1]).powi(2)).sqrt();
                prop_assert!((d_in - d_out).abs() <= 1e-9);
            }
        }
    }

    #[test]
    fn always_twenty_one_one_second_windows(len in 1usize..40_000, rate in 100u32..16_000) {
        let clip = AudioClip::new((0..len).map(|i| (i % 97) as f32 / 97.0).collect(), rate).unwrap();
        let windows = audio_windows(&clip).unwrap();
        prop_assert_eq!(windows.len(), 21);
        prop_assert!(windows.iter().all(|w| w.len() == rate as usize));
        // Periodic tiling: a clip that divides a 1 s window repeats exactly.
        if (rate as usize) % len == 0 {
            prop_assert_eq!(&windows[0], &windows[10]);
        }
    }
}

mod synthetic_api {

    use mls_uncertainty::io::Point3;
    use mls_uncertainty::synthetic::*;

    #[test]
    fn default_scene_round_trips_through_toml() {
        let spec = SceneSpec::default_scene();
        spec.validate().unwrap();
        let text = spec.to_toml_string();
        assert_eq!(SceneSpec::from_toml_str(&text).unwrap(), spec);
    }

    #[test]
    fn bundled_scene_file_matches_default() {
        let path = concat!(env!("CARGO_MANIFEST_DIR"), "/scenes/default.toml");
        assert_eq!(
            SceneSpec::from_file(path).unwrap(),
            SceneSpec::default_scene()
        );
    }

    #[test]
    fn unknown_key_is_named() {
        let text = "[scene]\ndensity = 10.0\ndensty = 3\n[[plane]]\norigin=[0,0,0]\nu=[1,0,0]\nv=[0,1,0]\n";
        let err = SceneSpec::from_toml_str(text).unwrap_err().to_string();
        assert!(err.contains("densty"), "{err}");
    }

    #[test]
    fn invalid_values_are_named() {
        let text = "[scene]\ndensity = -1.0\n[[plane]]\norigin=[0,0,0]\nu=[1,0,0]\nv=[0,1,0]\n";
        let err = SceneSpec::from_toml_str(text).unwrap_err().to_string();
        assert!(err.contains("scene.density"), "{err}");
        let text = "[scene]\ndensity = 1.0\n[[plane]]\norigin=[0,0,0]\nu=[1,0,0]\nv=[2,0,0]\n";
        assert!(matches!(
            SceneSpec::from_toml_str(text),
            Err(SceneError::Degenerate { kind: "plane", .. })
        ));
        let text = "[scene]\ndensity = 1.0\n";
        assert!(SceneSpec::from_toml_str(text).is_err());
    }

    #[test]
    fn sigma_is_nonnegative_and_grows_with_height() {
        let law = SceneSpec::default_scene().error;
        let low = law.sigma_mm(&Point3::new(10.0, 10.0, 0.0), 400.0);
        let high = law.sigma_mm(&Point3::new(10.0, 10.0, 3.0), 400.0);
        assert!(low >= 0.0 && high > low);
        assert!(
            law.sigma_mm(&Point3::new(0.0, 0.0, 0.0), 100.0)
                > law.sigma_mm(&Point3::new(0.0, 0.0, 0.0), 400.0)
        );
    }
}

mod sample {

    use mls_uncertainty::synthetic::*;

    fn unit_plane(density: f64, seed: u64) -> SceneSpec {
        SceneSpec {
            scene: SceneSettings {
                density,
                seed,
                mls_fraction: 1.0,
            },
            error: ErrorLaw::default(),
            planes: vec![PlaneSpec {
                origin: [0.0, 0.0, 1.5],
                u: [1.0, 0.0, 0.0],
                v: [0.0, 1.0, 0.0],
                density_scale: 1.0,
            }],
            boxes: vec![],
            cylinders: vec![],
            rods: vec![],
        }
    }

    #[test]
    fn plane_points_lie_on_the_plane() {
        let c = generate_reference(&unit_plane(100.0, 1)).unwrap();
        // Poisson(100): 5 standard deviations.
        assert!((50..=150).contains(&c.len()), "{}", c.len());
        assert!(c.points().iter().all(|p| (p.z - 1.5).abs() < 1e-12));
        assert!(c
            .points()
            .iter()
            .all(|p| (0.0..=1.0).contains(&p.x) && (0.0..=1.0).contains(&p.y)));
    }

    #[test]
    fn same_seed_same_cloud() {
        let spec = SceneSpec::default_scene();
        let mut small = spec.clone();
        small.scene.density = 20.0;
        assert_eq!(
            generate_reference(&small).unwrap(),
            generate_reference(&small).unwrap()
        );
        let mut other = small.clone();
        other.scene.seed += 1;
        assert_ne!(
            generate_reference(&small).unwrap(),
            generate_reference(&other).unwrap()
        );
    }

    #[test]
    fn box_counts_follow_area() {
        let mut spec = unit_plane(200.0, 3);
        spec.planes.clear();
        spec.boxes = vec![
            BoxSpec {
                center: [0.0, 0.0, 0.5],
                size: [1.0, 2.0, 1.0],
                yaw_deg: 20.0,
                density_scale: 1.0,
            },
            BoxSpec {
                center: [5.0, 0.0, 1.0],
                size: [2.0, 2.0, 2.0],
                yaw_deg: 0.0,
                density_scale: 1.0,
            },
        ];
        // Sides plus top: (2*(1+2)*1 + 2) + (2*(2+2)*2 + 4) = 8 + 20 m².
        let area: f64 = spec.primitives().iter().map(primitive_area).sum();
        assert!((area - 28.0).abs() < 1e-9);
        let c = generate_reference(&spec).unwrap();
        let expected = 200.0 * 28.0;
        assert!(
            (c.len() as f64 - expected).abs() < 5.0 * expected.sqrt(),
            "{}",
            c.len()
        );
    }

    #[test]
    fn cylinder_points_are_on_the_surface() {
        let mut spec = unit_plane(500.0, 4);
        spec.planes.clear();
        spec.rods = vec![CylinderSpec {
            base: [1.0, 2.0, 0.0],
            axis: [3.0, 0.0, 0.0],
            radius: 0.05,
            density_scale: 1.0,
        }];
        let c = generate_reference(&spec).unwrap();
        assert!(!c.is_empty());
        for p in c.points() {
            let r = ((p.y - 2.0).powi(2) + p.z.powi(2)).sqrt();
            assert!((r - 0.05).abs() < 1e-12);
            assert!(p.x >= 1.0 && p.x <= 4.0);
        }
    }

    #[test]
    fn default_scene_has_about_300k_points() {
        let n = SceneSpec::default_scene().expected_points();
        assert!((280_000.0..320_000.0).contains(&n), "{n}");
    }
}

mod corrupt {

    use mls_uncertainty::labeling::c2c_label;
    use mls_uncertainty::synthetic::*;

    fn plane_spec(density: f64, law: ErrorLaw) -> SceneSpec {
        SceneSpec {
            scene: SceneSettings {
                density,
                seed: 5,
                mls_fraction: 1.0,
            },
            error: law,
            planes: vec![PlaneSpec {
                origin: [0.0, 0.0, 0.0],
                u: [10.0, 0.0, 0.0],
                v: [0.0, 10.0, 0.0],
                density_scale: 1.0,
            }],
            boxes: vec![],
            cylinders: vec![],
            rods: vec![],
        }
    }

    #[test]
    fn zero_law_is_identity() {
        let spec = plane_spec(50.0, ErrorLaw::default());
        let pair = generate_pair(&spec).unwrap();
        assert_eq!(pair.mls.points(), pair.reference.points());
        assert!(pair.true_error_mm().iter().all(|&e| e == 0.0));
    }

    #[test]
    fn sparse_cloud_labels_track_displacement() {
        // About 0.3 m spacing against a 10 mm displacement scale.
        let spec = plane_spec(10.0, ErrorLaw::constant(10.0));
        let pair = generate_pair(&spec).unwrap();
        let labels = c2c_label(&pair.mls, &pair.reference).unwrap();
        let planted = pair.true_error_mm();
        let mean_planted = planted.iter().sum::<f64>() / planted.len() as f64;
        let mean_label = labels.c2c_mm.iter().sum::<f64>() / labels.len() as f64;
        assert!((mean_label - mean_planted).abs() < 0.1 * mean_planted);
        for (l, p) in labels.c2c_mm.iter().zip(planted) {
            assert!(*l <= p + 1e-9);
        }
    }

    #[test]
    fn truncation_bounds_displacement() {
        let mut law = ErrorLaw::constant(60.0);
        law.truncate_mm = 80.0;
        let pair = generate_pair(&plane_spec(5.0, law)).unwrap();
        assert!(pair.true_error_mm().iter().all(|&e| e < 80.0));
    }

    #[test]
    fn density_law_correlates_negatively() {
        let mut spec = plane_spec(
            30.0,
            ErrorLaw {
                density_mm: 300.0,
                sigma0_mm: 1.0,
                ..Default::default()
            },
        );
        spec.planes.push(PlaneSpec {
            origin: [20.0, 0.0, 0.0],
            u: [10.0, 0.0, 0.0],
            v: [0.0, 10.0, 0.0],
            density_scale: 4.0,
        });
        let pair = generate_pair(&spec).unwrap();
        let labels = c2c_label(&pair.mls, &pair.reference).unwrap();
        let density: Vec<f64> = pair
            .mls
            .scalar("primitive")
            .unwrap()
            .iter()
            .map(|&p| if p == 0.0 { 30.0 } else { 120.0 })
            .collect();
        let n = density.len() as f64;
        let (md, ml) = (
            density.iter().sum::<f64>() / n,
            labels.c2c_mm.iter().sum::<f64>() / n,
        );
        let cov: f64 = density
            .iter()
            .zip(&labels.c2c_mm)
            .map(|(d, l)| (d - md) * (l - ml))
            .sum();
        assert!(cov < 0.0);
    }

    #[test]
    fn mls_fraction_is_honored() {
        let mut spec = plane_spec(20.0, ErrorLaw::constant(1.0));
        spec.scene.mls_fraction = 0.5;
        let pair = generate_pair(&spec).unwrap();
        assert_eq!(
            pair.mls.len(),
            (pair.reference.len() as f64 * 0.5).round() as usize
        );
        assert_eq!(generate_pair(&spec).unwrap(), pair);
    }
}

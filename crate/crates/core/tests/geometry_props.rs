use lamot_core::geometry::{crop_points, iou_2d, rasterize_bev, Box2D, Box3D, PointCloud};
use proptest::prelude::*;

fn box2d() -> impl Strategy<Value = Box2D> {
    (-100.0f64..100.0, -100.0f64..100.0, 0.0f64..80.0, 0.0f64..80.0)
        .prop_map(|(l, t, w, h)| Box2D::new(l, t, l + w, t + h).unwrap())
}

fn box3d() -> impl Strategy<Value = Box3D> {
    (
        proptest::array::uniform3(-5.0f64..5.0),
        proptest::array::uniform3(0.5f64..4.0),
        -3.2f64..3.2,
    )
        .prop_map(|(c, s, yaw)| Box3D::new(c, s, yaw).unwrap())
}

fn cloud() -> impl Strategy<Value = PointCloud> {
    proptest::collection::vec(proptest::array::uniform3(-8.0f64..8.0), 0..200).prop_map(PointCloud::new)
}

proptest! {
    #[test]
    fn iou_symmetric_and_bounded(a in box2d(), b in box2d()) {
        let ab = iou_2d(&a, &b);
        prop_assert_eq!(ab, iou_2d(&b, &a));
        prop_assert!((0.0..=1.0).contains(&ab));
        if a.area() > 0.0 {
            prop_assert_eq!(iou_2d(&a, &a), 1.0);
        }
    }

    #[test]
    fn crop_is_subset_and_idempotent(c in cloud(), b in box3d()) {
        let once = crop_points(&c, &b);
        prop_assert!(once.points.iter().all(|p| c.points.contains(p) && b.contains(p)));
        let inside = c.points.iter().filter(|p| b.contains(p)).count();
        prop_assert_eq!(once.len(), inside);
        prop_assert_eq!(crop_points(&once, &b), once);
    }

    #[test]
    fn bev_ignores_point_order(c in cloud(), b in box3d(), rot in 0usize..200, rows in 1usize..12, cols in 1usize..12) {
        let mut shuffled = c.points.clone();
        if !shuffled.is_empty() {
            let k = rot % shuffled.len();
            shuffled.rotate_left(k);
            shuffled.reverse();
        }
        let a = rasterize_bev(&c, &b, (rows, cols)).unwrap();
        let s = rasterize_bev(&PointCloud::new(shuffled), &b, (rows, cols)).unwrap();
        prop_assert_eq!(a, s);
    }

    #[test]
    fn bev_cells_hold_max_height_of_contained_points(c in cloud(), b in box3d()) {
        // Every cropped point lands somewhere, and no cell exceeds the
        // highest cropped point.
        let inside = crop_points(&c, &b);
        let img = rasterize_bev(&inside, &b, (4, 4)).unwrap();
        let top = inside.points.iter().map(|p| p[2]).fold(f64::NEG_INFINITY, f64::max);
        for v in img.cells() {
            prop_assert!(*v == 0.0 || *v <= top);
        }
        for p in &inside.points {
            prop_assert!(img.cells().iter().any(|v| *v >= p[2]) || p[2] < 0.0);
        }
    }
}

use cit_core::prob::{binary_entropy, JointPmf, TensorPmf};
use proptest::prelude::*;

fn matrix() -> impl Strategy<Value = Vec<Vec<f64>>> {
    (2usize..=4, 2usize..=4).prop_flat_map(|(nx, ny)| {
        prop::collection::vec(prop::collection::vec(0.0f64..1.0, ny), nx).prop_filter_map("no mass", |rows| {
            let total: f64 = rows.iter().flatten().sum();
            (total > 1e-3).then(|| rows.iter().map(|r| r.iter().map(|v| v / total).collect()).collect())
        })
    })
}

proptest! {
    #[test]
    fn chain_rule(rows in matrix()) {
        let p = JointPmf::from_rows(&rows).unwrap();
        let t = TensorPmf::from_joint(&p);
        let lhs = t.entropy(&["X", "Y"]).unwrap();
        let rhs = t.entropy(&["X"]).unwrap() + t.conditional_entropy(&["Y"], &["X"]).unwrap();
        prop_assert!((lhs - rhs).abs() <= 1e-9);
        prop_assert!((lhs - p.entropy_xy()).abs() <= 1e-9);
    }

    #[test]
    fn mutual_information_bounds(rows in matrix()) {
        let p = JointPmf::from_rows(&rows).unwrap();
        let mi = p.mutual_information();
        prop_assert!(mi >= -1e-12);
        prop_assert!(mi <= p.entropy_x().min(p.entropy_y()) + 1e-9);
        prop_assert!((mi - p.transposed().mutual_information()).abs() <= 1e-12);
    }

    #[test]
    fn relabeling_invariance(rows in matrix(), shift in 0usize..4) {
        let p = JointPmf::from_rows(&rows).unwrap();
        let mut permuted = rows.clone();
        let k = shift % permuted.len();
        permuted.rotate_left(k);
        for r in permuted.iter_mut() {
            r.reverse();
        }
        let q = JointPmf::from_rows(&permuted).unwrap();
        prop_assert!((p.mutual_information() - q.mutual_information()).abs() <= 1e-12);
        prop_assert!((p.entropy_xy() - q.entropy_xy()).abs() <= 1e-12);
    }

    #[test]
    fn binary_entropy_symmetry(p in 0.0f64..=1.0) {
        let h = binary_entropy(p);
        prop_assert!((h - binary_entropy(1.0 - p)).abs() <= 1e-12);
        prop_assert!((0.0..=1.0 + 1e-12).contains(&h));
    }
}

#[test]
fn near_normalized_input_is_rescaled() {
    let p = JointPmf::from_rows(&[vec![0.5, 0.2], vec![0.1, 0.2000005]]).unwrap();
    assert!((p.cells().iter().sum::<f64>() - 1.0).abs() < 1e-15);
    assert!(JointPmf::from_rows(&[vec![0.5, 0.2], vec![0.1, 0.21]]).is_err());
}

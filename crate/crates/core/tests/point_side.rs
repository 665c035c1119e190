use std::time::Instant;

use plectic::elliptic::{point_side, point_side_ordered, PointSideSpec, Reduction};
use plectic::padic::Padic;
use plectic::tensor::TensorValue;

fn load(name: &str) -> PointSideSpec {
    let path = format!("{}/data/{name}", env!("CARGO_MANIFEST_DIR"));
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

fn check(name: &str, prec: u32) {
    let spec = load(name);
    let input = spec.to_input().unwrap();
    let t0 = Instant::now();
    let r = point_side(&input, prec).unwrap();
    assert!(t0.elapsed().as_secs() < 60);
    for s in &r.sides {
        assert!(s.residual_valuations.iter().all(|&v| v >= prec as i64), "{name}: point off curve");
    }
    assert_eq!(r.sides[0].tate.reduction, Reduction::NonSplit);
    assert_eq!(r.sides[1].tate.reduction, Reduction::Split);
    assert!(r.projected.is_pure_alpha_alpha());
    let expected = Padic::parse(spec.expected.as_deref().unwrap(), 3).unwrap();
    let got = TensorValue::alpha_alpha(r.log_a().clone());
    let (k, _) = got.agreement_up_to_symmetry(&TensorValue::alpha_alpha(expected));
    assert!(k >= prec as i64, "{name}: got {got}");
}

#[test]
fn first_instance_matches_reference_digits() {
    check("point_side_62_21w.json", 10);
}

#[test]
fn second_instance_matches_golden() {
    check("point_side_41_32w.json", 12);
}

#[test]
fn swapping_sides_transposes_and_negates() {
    let input = load("point_side_62_21w.json").to_input().unwrap();
    let a = point_side_ordered(&input, [1, 2], 10).unwrap();
    let b = point_side_ordered(&input, [2, 1], 10).unwrap();
    // the determinant is alternating, so the side swap also flips the sign
    assert!(a.projected.swap().neg().agreement(&b.projected) >= 10);
    assert!(a.det.swap().neg().agreement(&b.det) >= 10);
}

#[test]
fn literal_reading_of_second_instance_is_off_curve() {
    let mut spec = load("point_side_41_32w.json");
    spec.conjugate_w = false;
    let input = spec.to_input().unwrap();
    assert!(point_side(&input, 8).map(|r| r.sides[0].residual_valuations[0] < 8).unwrap_or(true));
}

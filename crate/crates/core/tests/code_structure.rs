use tesseract_core::code::*;
use tesseract_core::Basis;

#[test]
fn tesseract_has_distance_four() {
    let code = StabilizerCode::tesseract();
    assert_eq!(code.stabilizers.len(), 10);
    assert_eq!(code.distance(None), 4);
    assert_eq!(code.distance(Some(Basis::X)), 4);
}

#[test]
fn automorphism_group_order() {
    let g = AutomorphismGroup::close(seed_generators()).unwrap();
    assert_eq!(g.order(), 16 * 20160);
    assert!(g.generators.iter().all(is_automorphism));
}

#[test]
fn named_automorphisms_are_automorphisms() {
    for (name, p) in named_automorphisms() {
        assert!(is_automorphism(&p), "{name}");
        assert!(logical_action_of(&p).is_ok(), "{name}");
    }
}

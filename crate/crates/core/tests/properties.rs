use milnor_core::expansion::{build_special, SpecialExpansion, Strategy as Build};
use milnor_core::freegroup::{artin, longitudes, BraidWord, FreeGroupWord};
use milnor_core::koszul::{nilpotent_basis, ExteriorChain};
use milnor_core::lie::{lyndon_basis, LieElement};
use milnor_core::linalg::PivotOrder;
use milnor_core::milnor::{art_theta, art_theta_braid, truncated_milnor, LinkData};
use milnor_core::morita::{morita_milnor_with, MoritaInput};
use milnor_core::tensor::TensorSeries;
use milnor_core::trees::{Shape, TreeDiagram};
use milnor_core::Q;
use proptest::prelude::*;
use std::sync::OnceLock;

fn small_q() -> impl Strategy<Value = Q> {
    (-4i64..=4, 1i64..=3).prop_map(|(p, q)| Q::new(p.into(), q.into()))
}

fn free_word(n: usize) -> impl Strategy<Value = FreeGroupWord> {
    prop::collection::vec((1..=n as i64, any::<bool>()), 0..8).prop_map(move |v| {
        FreeGroupWord::from_signed(n, &v.iter().map(|(g, s)| if *s { *g } else { -*g }).collect::<Vec<_>>()).unwrap()
    })
}

fn braid(n: usize, max_len: usize) -> impl Strategy<Value = BraidWord> {
    prop::collection::vec((1..n, 1..=n, any::<bool>()), 0..max_len).prop_map(move |v| {
        v.into_iter().fold(BraidWord::identity(n), |acc, (i, j, pos)| {
            let (i, j) = if i < j { (i, j) } else { (i, (i + 1).min(n)) };
            let g = BraidWord::generator(n, i, j).unwrap();
            acc.mul(&if pos { g } else { g.inverse() })
        })
    })
}

fn lie(n: usize, top: usize) -> impl Strategy<Value = LieElement> {
    let words: Vec<_> = (1..=top).flat_map(|d| lyndon_basis(n, d).iter().copied().collect::<Vec<_>>()).collect();
    let len = words.len();
    prop::collection::vec(small_q(), len)
        .prop_map(move |cs| LieElement::from_coords(n, top, words.iter().copied().zip(cs)).unwrap())
}

fn shape(n: usize) -> impl Strategy<Value = Shape> {
    let leaf = (1..=n).prop_map(Shape::leaf);
    leaf.prop_recursive(4, 6, 2, |inner| (inner.clone(), inner).prop_map(|(a, b)| Shape::node(a, b)))
}

/// Reverses the children of every node where `flips` says so; returns the
/// number of swaps.
fn flip(s: &Shape, flips: &mut impl Iterator<Item = bool>) -> (Shape, usize) {
    match s {
        Shape::Leaf(c) => (Shape::Leaf(*c), 0),
        Shape::Node(a, b) => {
            let (a, ka) = flip(a, flips);
            let (b, kb) = flip(b, flips);
            if flips.next().unwrap_or(false) {
                (Shape::node(b, a), ka + kb + 1)
            } else {
                (Shape::node(a, b), ka + kb)
            }
        }
    }
}

fn theta3() -> &'static SpecialExpansion {
    static T: OnceLock<SpecialExpansion> = OnceLock::new();
    T.get_or_init(|| SpecialExpansion::new(build_special(3, 4, Build::Randomized { seed: 5 }).unwrap()).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 32, ..ProptestConfig::default() })]

    #[test]
    fn word_times_inverse_is_trivial(w in free_word(3)) {
        prop_assert!(w.mul(&w.inverse()).is_empty());
    }

    #[test]
    fn artin_is_a_homomorphism(b1 in braid(3, 4), b2 in braid(3, 4), w in free_word(3)) {
        let lhs = artin(&b1.mul(&b2)).apply(&w);
        let rhs = artin(&b1).apply(&artin(&b2).apply(&w));
        prop_assert_eq!(lhs, rhs);
    }

    #[test]
    fn boundary_word_is_fixed(b in braid(4, 5)) {
        let x = FreeGroupWord::boundary(4);
        prop_assert_eq!(artin(&b).apply(&x), x);
    }

    #[test]
    fn magnus_is_multiplicative(u in free_word(2), v in free_word(2)) {
        prop_assert_eq!(u.mul(&v).magnus(4), &u.magnus(4) * &v.magnus(4));
    }

    #[test]
    fn lie_tensor_round_trip(x in lie(3, 4)) {
        prop_assert_eq!(LieElement::from_tensor(&x.to_tensor()).unwrap(), x);
    }

    #[test]
    fn jacobi_identity(x in lie(2, 2), y in lie(2, 2), z in lie(2, 2)) {
        let (x, y, z) = (x.retruncate(5), y.retruncate(5), z.retruncate(5));
        let j = x.bracket(&y.bracket(&z).unwrap()).unwrap()
            .try_add(&y.bracket(&z.bracket(&x).unwrap()).unwrap()).unwrap()
            .try_add(&z.bracket(&x.bracket(&y).unwrap()).unwrap()).unwrap();
        prop_assert!(j.is_zero());
    }

    #[test]
    fn bch_of_primitives_is_primitive(x in lie(2, 4), y in lie(2, 4)) {
        let z = TensorSeries::bch(&x.to_tensor(), &y.to_tensor()).unwrap();
        prop_assert!(z.is_primitive());
        let back = TensorSeries::bch(&z, &(-y.to_tensor())).unwrap();
        prop_assert_eq!(back, x.to_tensor());
    }

    #[test]
    fn exp_is_grouplike(x in lie(3, 3)) {
        let e = x.to_tensor().exp().unwrap();
        prop_assert!(e.is_grouplike());
        prop_assert_eq!(e.log().unwrap(), x.to_tensor());
    }

    #[test]
    fn boundary_squares_to_zero(p in 1usize..=4, terms in prop::collection::vec((prop::collection::vec(0usize..8, 4), -3i64..=3), 1..6)) {
        let basis = nilpotent_basis(2, 4);
        let mut ch = ExteriorChain::zero(basis, p);
        for (t, c) in terms {
            ch.add_wedge(&t[..p], Q::from_integer(c.into()));
        }
        let d = ch.boundary();
        prop_assert!(d.boundary().is_zero());
        for (t, _) in d.terms() {
            prop_assert!(ch.degrees().contains(&d.tuple_degree(t)));
        }
    }

    #[test]
    fn canonical_form_ignores_presentation(root in 1usize..=3, s in shape(3), flips in prop::collection::vec(any::<bool>(), 8)) {
        let (t, sign) = match TreeDiagram::from_planar(root, &s).unwrap() {
            Some(x) => x,
            None => return Ok(()),
        };
        let (s2, swaps) = flip(&s, &mut flips.into_iter());
        let (u, sign2) = TreeDiagram::from_planar(root, &s2).unwrap().unwrap();
        prop_assert_eq!(&t, &u);
        prop_assert_eq!(sign, sign2 * if swaps % 2 == 0 { 1 } else { -1 });
        prop_assert!(t.eta(3).unwrap().in_d().unwrap());
    }

    #[test]
    fn braid_path_matches_longitudes(b in braid(3, 3)) {
        let direct = art_theta(&longitudes(&b).unwrap(), theta3(), 4).unwrap();
        prop_assert_eq!(art_theta_braid(&b, theta3(), 4).unwrap(), direct);
    }
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 12, ..ProptestConfig::default() })]

    #[test]
    fn truncated_milnor_is_additive(b1 in braid(3, 4), b2 in braid(3, 4)) {
        let m = |b: &BraidWord| truncated_milnor(&LinkData::Braid(b.clone()), theta3(), 1).unwrap();
        prop_assert_eq!(m(&b1.mul(&b2)), m(&b1).try_add(&m(&b2)).unwrap());
    }

    #[test]
    fn morita_class_is_additive(u in braid(3, 2), v in braid(3, 2), w in braid(3, 2)) {
        let l1 = BraidWord::commutator(&u, &v);
        let l2 = BraidWord::commutator(&v, &w);
        let cls = |b: &BraidWord| {
            let input = MoritaInput::new(&LinkData::Braid(b.clone()), theta3(), 1).unwrap();
            morita_milnor_with(&input, PivotOrder::Reverse).unwrap()
        };
        prop_assert_eq!(cls(&l1.mul(&l2)), cls(&l1).try_add(&cls(&l2)).unwrap());
    }
}

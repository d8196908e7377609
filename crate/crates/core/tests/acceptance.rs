//! End-to-end acceptance checks. Each criterion prints one PASS or FAIL line.

use std::io::Write;
use std::time::Instant;

use milnor_core::expansion::{build_special, Expansion, SpecialExpansion, Strategy};
use milnor_core::freegroup::{artin, longitudes, milnor_level, BraidWord};
use milnor_core::koszul::{homology, nilpotent_basis, phi_matrix, ExteriorChain};
use milnor_core::lie::{d_dimension, lyndon_basis, HTensorLie, LieElement};
use milnor_core::linalg::PivotOrder;
use milnor_core::milnor::{milnor_degree_k, total_milnor, truncated_milnor, LinkData};
use milnor_core::morita::{commutative_diagram, d2_composition, morita_milnor_with, sigma, MoritaInput};
use milnor_core::tensor::TensorSeries;
use milnor_core::trees::enumerate_trees;
use milnor_core::Q;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

const SEEDS: [u64; 2] = [11, 29];

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn a(n: usize, i: usize, j: usize) -> BraidWord {
    BraidWord::generator(n, i, j).unwrap()
}

fn comm(x: &BraidWord, y: &BraidWord) -> BraidWord {
    BraidWord::commutator(x, y)
}

fn special(n: usize, trunc: usize, s: Strategy) -> SpecialExpansion {
    SpecialExpansion::new(build_special(n, trunc, s).unwrap()).unwrap()
}

fn expansions(n: usize, trunc: usize) -> Vec<(String, SpecialExpansion)> {
    let mut v = vec![("canonical".to_string(), special(n, trunc, Strategy::Canonical))];
    for seed in SEEDS {
        v.push((format!("seed {seed}"), special(n, trunc, Strategy::Randomized { seed })));
    }
    v
}

fn random_generator(rng: &mut ChaCha8Rng, n: usize) -> BraidWord {
    let i = rng.gen_range(1..n);
    let j = rng.gen_range(i + 1..=n);
    let g = a(n, i, j);
    if rng.gen_bool(0.5) {
        g
    } else {
        g.inverse()
    }
}

fn random_word(rng: &mut ChaCha8Rng, n: usize, len: usize) -> BraidWord {
    (0..len).fold(BraidWord::identity(n), |acc, _| acc.mul(&random_generator(rng, n)))
}

/// A random element of `PB_n(k)` for `k <= 3`, built from nested commutators.
fn random_in_level(rng: &mut ChaCha8Rng, n: usize, k: usize) -> BraidWord {
    match k {
        1 => {
            let len = rng.gen_range(1..=4);
            random_word(rng, n, len)
        }
        2 => {
            let x = random_word(rng, n, 2);
            let y = random_generator(rng, n);
            comm(&x, &y)
        }
        _ => {
            let inner = random_in_level(rng, n, k - 1);
            comm(&random_generator(rng, n), &inner)
        }
    }
}

fn criterion_1() -> Outcome {
    let n = 4;
    let mut checked = 0;
    for r in 1..=n {
        for s in r + 1..=n {
            for i in 1..=n {
                for j in i + 1..=n {
                    let lhs = a(n, r, s).mul(&a(n, i, j)).mul(&a(n, r, s).inverse());
                    let inv = |x: BraidWord| x.inverse();
                    let prod = |ws: &[BraidWord]| ws.iter().fold(BraidWord::identity(n), |acc, w| acc.mul(w));
                    let rhs = if s < i || (i < r && s < j) {
                        a(n, i, j)
                    } else if s == i {
                        prod(&[inv(a(n, r, j)), a(n, i, j), a(n, r, j)])
                    } else if i == r && s < j {
                        prod(&[inv(a(n, r, j)), inv(a(n, s, j)), a(n, i, j), a(n, s, j), a(n, r, j)])
                    } else if r < i && i < s && s < j {
                        prod(&[
                            inv(a(n, r, j)),
                            inv(a(n, s, j)),
                            a(n, r, j),
                            a(n, s, j),
                            a(n, i, j),
                            inv(a(n, s, j)),
                            inv(a(n, r, j)),
                            a(n, s, j),
                            a(n, r, j),
                        ])
                    } else {
                        continue;
                    };
                    let (fl, fr) = (artin(&lhs), artin(&rhs));
                    for g in 1..=n {
                        ensure(fl.image(g) == fr.image(g), || {
                            format!("A({r},{s}) A({i},{j}) A({r},{s})^-1 differs on x{g}")
                        })?;
                    }
                    checked += 1;
                }
            }
        }
    }
    Ok(format!("{checked} relations on all 4 generators"))
}

fn criterion_2() -> Outcome {
    let n = 4;
    let exps = vec![
        ("canonical", special(n, 2, Strategy::Canonical)),
        ("seeded", special(n, 2, Strategy::Randomized { seed: SEEDS[0] })),
    ];
    let mut count = 0;
    for i in 1..=n {
        for j in i + 1..=n {
            let b = a(n, i, j);
            // Exponent sums of the longitudes give the Magnus degree-1 layer.
            let t = longitudes(&b).unwrap();
            let oracle: Vec<LieElement> = (1..=n)
                .map(|p| {
                    let w = t.word(p);
                    let coords = (1..=n)
                        .map(|q| (milnor_core::tensor::Word::letter(q), Q::from_integer(w.exponent_sum(q).into())));
                    LieElement::from_coords(n, 1, coords).unwrap()
                })
                .collect();
            let oracle = HTensorLie::new(oracle).unwrap();
            let mut expected = vec![LieElement::zero(n, 1); n];
            expected[i - 1] = LieElement::generator(n, 1, j);
            expected[j - 1] = LieElement::generator(n, 1, i);
            let expected = HTensorLie::new(expected).unwrap();
            ensure(oracle == expected, || format!("exponent-sum oracle disagrees for A({i},{j})"))?;
            for (name, theta) in &exps {
                let mu = milnor_degree_k(&LinkData::Braid(b.clone()), theta, 1).map_err(|e| e.to_string())?;
                ensure(mu == expected, || format!("μ_1 of A({i},{j}) with the {name} expansion: {mu:?}"))?;
                count += 1;
            }
        }
    }
    Ok(format!("{count} linking-number layers"))
}

fn criterion_3() -> Outcome {
    let n = 3;
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut corpus = vec![(comm(&a(3, 1, 2), &a(3, 1, 3)), 2), (comm(&a(3, 1, 2), &comm(&a(3, 1, 2), &a(3, 1, 3))), 3)];
    while corpus.len() < 8 {
        let level = rng.gen_range(2..=3);
        let b = random_in_level(&mut rng, n, level);
        let k = milnor_level(&b, 4).map_err(|e| e.to_string())?;
        if (2..=3).contains(&k) {
            corpus.push((b, k));
        }
    }
    let exps = expansions(n, 4);
    for (b, k) in &corpus {
        ensure(milnor_level(b, 4).unwrap() == *k, || format!("{b} has the wrong level"))?;
        let data = LinkData::Braid(b.clone());
        let values: Vec<HTensorLie> = exps
            .iter()
            .map(|(_, t)| milnor_degree_k(&data, t, *k))
            .collect::<Result<_, _>>()
            .map_err(|e| e.to_string())?;
        ensure(!values[0].is_zero(), || format!("μ_{k} of {b} vanishes"))?;
        for (v, (name, _)) in values.iter().zip(&exps).skip(1) {
            ensure(*v == values[0], || format!("μ_{k} of {b} differs for the {name} expansion"))?;
        }
    }
    Ok(format!("{} braids agree across {} expansions", corpus.len(), exps.len()))
}

fn criterion_4() -> Outcome {
    let n = 3;
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut pairs = 0;
    for k in 1..=2 {
        let theta = special(n, 2 * k, Strategy::Randomized { seed: SEEDS[1] });
        for _ in 0..20 {
            let l1 = random_in_level(&mut rng, n, k);
            let l2 = random_in_level(&mut rng, n, k);
            let prod = l1.mul(&l2);
            let m = |b: &BraidWord| truncated_milnor(&LinkData::Braid(b.clone()), &theta, k).map_err(|e| e.to_string());
            let (m1, m2, m12) = (m(&l1)?, m(&l2)?, m(&prod)?);
            ensure(m12 == m1.try_add(&m2).unwrap(), || format!("not additive on {l1} * {l2}"))?;
            for d in k..2 * k {
                ensure(m12.degree_part(d).in_d().unwrap(), || format!("degree {d} of {l1} * {l2} is not in D"))?;
            }
            pairs += 1;
        }
    }
    Ok(format!("{pairs} pairs additive with D-valued parts"))
}

fn random_lie(rng: &mut ChaCha8Rng, n: usize, trunc: usize) -> LieElement {
    let mut coords = Vec::new();
    for d in 1..trunc {
        for w in lyndon_basis(n, d).iter() {
            if rng.gen_bool(0.4) {
                coords.push((*w, Q::new(rng.gen_range(-3i64..=3).into(), rng.gen_range(1i64..=3).into())));
            }
        }
    }
    LieElement::from_coords(n, trunc, coords).unwrap()
}

fn criterion_5() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for case in 0..100 {
        let n = rng.gen_range(1..=3);
        let trunc = rng.gen_range(2..=6);
        let x = random_lie(&mut rng, n, trunc).to_tensor();
        let y = random_lie(&mut rng, n, trunc).to_tensor();
        let z = TensorSeries::bch(&x, &y).map_err(|e| e.to_string())?;
        ensure(z.is_primitive(), || format!("case {case}: bch(a, b) is not primitive (n={n}, N={trunc})"))?;
        let back = x.exp().and_then(|e| e.log()).map_err(|e| e.to_string())?;
        ensure(back == x, || format!("case {case}: log(exp(a)) != a"))?;
    }
    Ok("100 primitive pairs, log∘exp = id".into())
}

fn criterion_6() -> Outcome {
    for (n, trunc) in [(2, 5), (3, 5), (4, 4)] {
        for s in [Strategy::Canonical, Strategy::Randomized { seed: SEEDS[0] }] {
            let e = build_special(n, trunc, s).map_err(|e| e.to_string())?;
            ensure(e.is_special(), || format!("builder output for n={n}, N={trunc} is not special"))?;
        }
    }
    for n in 2..=4 {
        let r = Expansion::exponential(n, 4).check_special();
        ensure(r.grouplike && r.tangential && !r.normalized && r.first_failing_degree == Some(2), || {
            format!("exp-expansion report for n={n}: {r:?}")
        })?;
    }
    Ok("special for (2,5), (3,5), (4,4); exp-expansion fails at degree 2".into())
}

fn random_chain(rng: &mut ChaCha8Rng, n: usize, class: usize, p: usize) -> ExteriorChain {
    let basis = nilpotent_basis(n, class);
    let mut ch = ExteriorChain::zero(basis.clone(), p);
    for _ in 0..6 {
        let t: Vec<usize> = (0..p).map(|_| rng.gen_range(0..basis.len())).collect();
        ch.add_wedge(&t, Q::from_integer(rng.gen_range(-4i64..=4).into()));
    }
    ch
}

fn criterion_7() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut chains = 0;
    for n in 2..=3 {
        for class in 1..=5 {
            for p in 1..=4 {
                for _ in 0..5 {
                    let ch = random_chain(&mut rng, n, class, p);
                    ensure(ch.boundary().boundary().is_zero(), || format!("∂∂ != 0 for n={n}, c={class}, p={p}"))?;
                    chains += 1;
                }
            }
        }
    }
    let mut trees = 0;
    for n in 1..=3 {
        for l in 1..=4 {
            let basis = nilpotent_basis(n, l);
            for t in enumerate_trees(n, l).map_err(|e| e.to_string())?.iter() {
                let lhs = t.fission(&basis).map_err(|e| e.to_string())?.boundary();
                let rhs = t.leaf_wedge_sum(&basis).map_err(|e| e.to_string())?;
                ensure(lhs == rhs, || format!("∂φ(T) != Σ col(v) ∧ comm(T_v) for {t}"))?;
                trees += 1;
            }
        }
    }
    Ok(format!("∂∂ = 0 on {chains} chains; fission identity on {trees} trees"))
}

const IO_CASES: [(usize, usize); 4] = [(2, 2), (2, 3), (3, 2), (3, 3)];

fn criterion_8() -> Outcome {
    let mut rows = Vec::new();
    for (n, k) in IO_CASES {
        let h = homology(3, n, k - 1).map_err(|e| e.to_string())?;
        let d: usize = (k..=2 * k - 2).map(|l| d_dimension(n, l)).sum();
        ensure(h.dim() == d, || format!("(n,k)=({n},{k}): dim H_3 = {} but Σ dim D_l = {d}", h.dim()))?;
        rows.push(format!("({n},{k})={d}"));
    }
    Ok(rows.join(" "))
}

fn criterion_9() -> Outcome {
    let mut rows = Vec::new();
    for (n, k) in IO_CASES {
        let h = homology(3, n, k - 1).map_err(|e| e.to_string())?;
        let mut rank = 0;
        for l in k..=2 * k - 2 {
            rank += phi_matrix(n, k, l).map_err(|e| e.to_string())?.rank();
        }
        ensure(rank == h.dim(), || format!("(n,k)=({n},{k}): rank Φ = {rank}, dim H_3 = {}", h.dim()))?;
        rows.push(format!("({n},{k})={rank}"));
    }
    Ok(rows.join(" "))
}

fn morita_input(b: &BraidWord, theta: &SpecialExpansion, k: usize) -> Result<MoritaInput, String> {
    MoritaInput::new(&LinkData::Braid(b.clone()), theta, k).map_err(|e| format!("{b}: {e}"))
}

fn criterion_10() -> Outcome {
    let n = 3;
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let mut summary = Vec::new();
    for k in 1..=2 {
        let trunc = MoritaInput::required_truncation(k);
        let thetas =
            vec![special(n, trunc, Strategy::Canonical), special(n, trunc, Strategy::Randomized { seed: SEEDS[0] })];
        let mut corpus = match k {
            1 => vec![comm(&a(3, 1, 2), &a(3, 1, 3)), comm(&a(3, 1, 2), &a(3, 2, 3)), comm(&a(3, 1, 3), &a(3, 2, 3))],
            _ => vec![
                comm(&a(3, 1, 2), &comm(&a(3, 1, 2), &a(3, 1, 3))),
                comm(&a(3, 2, 3), &comm(&a(3, 1, 2), &a(3, 1, 3))),
            ],
        };
        while corpus.len() < 5 {
            let b = random_in_level(&mut rng, n, k + 1);
            if milnor_level(&b, k + 2).unwrap() == k + 1 {
                corpus.push(b);
            }
        }
        let mut classes = Vec::new();
        for b in &corpus {
            let input = morita_input(b, &thetas[0], k)?;
            ensure(sigma(&input).boundary().is_zero(), || format!("∂σ != 0 for {b}"))?;
            let f = morita_milnor_with(&input, PivotOrder::Forward).map_err(|e| e.to_string())?;
            let r = morita_milnor_with(&input, PivotOrder::Reverse).map_err(|e| e.to_string())?;
            ensure(f == r, || format!("class of {b} depends on the bounding chain"))?;
            for theta in &thetas {
                let input = morita_input(b, theta, k)?;
                let check = commutative_diagram(&input).map_err(|e| e.to_string())?;
                ensure(check.commutes(), || format!("square fails for {b}: {:?}", check.report()))?;
                let mu = total_milnor(&LinkData::Braid(b.clone()), theta, k + 2).map_err(|e| e.to_string())?;
                let expected = mu.degree_part(k + 1).retruncate(k + 1);
                let d2 = d2_composition(&check.morita).map_err(|e| e.to_string())?;
                ensure(d2 == expected, || format!("d2 ∘ M̄ != μ_{} for {b}", k + 1))?;
            }
            classes.push(f);
        }
        let mut pairs = 0;
        'outer: for (x, cx) in corpus.iter().zip(&classes) {
            for (y, cy) in corpus.iter().zip(&classes) {
                let prod = x.mul(y);
                let c = morita_milnor_with(&morita_input(&prod, &thetas[0], k)?, PivotOrder::Forward)
                    .map_err(|e| e.to_string())?;
                ensure(c == cx.try_add(cy).unwrap(), || format!("M̄ not additive on {x} * {y}"))?;
                pairs += 1;
                if pairs >= 10 {
                    break 'outer;
                }
            }
        }
        let deep: Vec<BraidWord> = match k {
            1 => vec![
                comm(&a(3, 1, 2), &comm(&a(3, 1, 2), &a(3, 1, 3))),
                comm(&a(3, 1, 3), &comm(&a(3, 2, 3), &a(3, 1, 2))),
            ],
            _ => {
                let c3 = comm(&a(3, 1, 2), &comm(&a(3, 1, 2), &a(3, 1, 3)));
                let c4 = comm(&a(3, 1, 3), &c3);
                vec![comm(&a(3, 2, 3), &c4)]
            }
        };
        for b in &deep {
            ensure(milnor_level(b, 2 * k + 1).unwrap() > 2 * k, || format!("{b} is not in level {}", 2 * k + 1))?;
            let c =
                morita_milnor_with(&morita_input(b, &thetas[0], k)?, PivotOrder::Forward).map_err(|e| e.to_string())?;
            ensure(c.is_zero(), || format!("{b} in level {} has a nonzero class", 2 * k + 1))?;
        }
        ensure(classes.iter().any(|c| !c.is_zero()), || format!("every class vanishes for k={k}"))?;
        summary.push(format!("k={k}: {} links, {pairs} products, {} deep", corpus.len(), deep.len()));
    }
    Ok(summary.join("; "))
}

#[test]
fn acceptance() {
    let criteria: [Criterion; 10] = [
        ("braid relations in PB_4", criterion_1),
        ("linking numbers", criterion_2),
        ("independence of the expansion", criterion_3),
        ("truncated invariant is a homomorphism", criterion_4),
        ("BCH and primitivity", criterion_5),
        ("special expansion builder", criterion_6),
        ("Koszul boundary and fission", criterion_7),
        ("H_3 dimensions", criterion_8),
        ("Φ has full rank", criterion_9),
        ("Morita–Milnor classes", criterion_10),
    ];
    // Written to the raw stderr handle so the lines survive output capture.
    let mut log = std::io::stderr();
    log.write_all(b"\n").expect("stderr");
    let mut failures = 0;
    for (k, (name, f)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = std::panic::catch_unwind(*f).unwrap_or_else(|_| Err("panicked".into()));
        let secs = start.elapsed().as_secs_f64();
        let line = match outcome {
            Ok(detail) => format!("PASS {:>2} {name}: {detail} ({secs:.1}s)\n", k + 1),
            Err(detail) => {
                failures += 1;
                format!("FAIL {:>2} {name}: {detail} ({secs:.1}s)\n", k + 1)
            }
        };
        log.write_all(line.as_bytes()).expect("stderr");
    }
    assert_eq!(failures, 0, "{failures} acceptance criteria failed");
}

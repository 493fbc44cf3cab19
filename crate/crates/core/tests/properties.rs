use cutquad::error_estimator::Cholesky;
use cutquad::octree::SubCell;
use cutquad::quadrature::{cell_rule, reference_cell_rule, rule_size};
use cutquad::{
    assemble_scheme, classify_cell, indicators, localized_errors, make_ellipsoid_exclusion, optimize,
    partition_element, partition_volume, predict_counts, tessellate, worst_case_error, Affine, Basis, BoxCell,
    BoxRuleKind, Classification, ErrorModel, FnField, LevelSet, Marked, Marking, Norm, OptimizeOptions, Partition,
    PolynomialSpace, RuleFamily, RuleIndexList, ScalingInputs, SignRule, StopRule,
};
use proptest::prelude::*;

fn ellipse(r1: f64, r2: f64, phi: f64, dim: usize, depth: u32) -> Option<Partition> {
    let f = make_ellipsoid_exclusion(r1, r2, phi, dim).unwrap();
    let p = partition_element(&f, &BoxCell::unit(dim), depth).unwrap();
    (!p.outside && !p.is_untrimmed()).then_some(p)
}

/// vol{x ∈ [0,1]^d : n·x ≤ c} for n with nonzero components.
fn half_space_volume(n: &[f64], c: f64) -> f64 {
    let d = n.len();
    // reflect negative components so that every n_i > 0
    let mut c = c;
    let n: Vec<f64> = n
        .iter()
        .map(|&ni| {
            if ni < 0.0 {
                c -= ni;
                -ni
            } else {
                ni
            }
        })
        .collect();
    let fact: f64 = (1..=d).map(|i| i as f64).product();
    let prod: f64 = n.iter().product();
    let mut s = 0.0;
    for mask in 0..1usize << d {
        let shift: f64 = (0..d).filter(|i| mask >> i & 1 == 1).map(|i| n[i]).sum();
        let sign = if mask.count_ones() % 2 == 0 { 1.0 } else { -1.0 };
        s += sign * (c - shift).max(0.0).powi(d as i32);
    }
    s / (fact * prod)
}

/// `None` when the Gramian is numerically singular for this domain.
fn model(p: &Partition, space: PolynomialSpace) -> Option<ErrorModel> {
    match ErrorModel::new(p, space) {
        Ok(m) => Some(m),
        Err(cutquad::Error::Conditioning { .. }) => None,
        Err(e) => panic!("{e}"),
    }
}

fn point(v: &[f64]) -> [f64; 3] {
    let mut p = [0.0; 3];
    p[..v.len()].copy_from_slice(v);
    p
}

fn ellipse_params() -> impl Strategy<Value = (f64, f64, f64)> {
    (0.2..1.2f64, 0.2..1.2f64, 0.0..180.0f64)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn classification_is_mirror_invariant(
        (r1, r2, phi) in ellipse_params(),
        ox in 0.0..0.75f64, oy in 0.0..0.75f64, size in 0.01..0.25f64,
    ) {
        // sampling a mirrored field on the mirrored cell sees the same samples in another order
        let f = make_ellipsoid_exclusion(r1, r2, phi, 2).unwrap();
        let g = FnField::new(2, move |x| f.eval(&[1.0 - x[0], x[1], 0.0]));
        let f = make_ellipsoid_exclusion(r1, r2, phi, 2).unwrap();
        let cell = BoxCell { level: 1, origin: [ox, oy, 0.0], size, dim: 2 };
        let mirrored = BoxCell { origin: [1.0 - ox - size, oy, 0.0], ..cell.clone() };
        let rule = SignRule::for_element(1.0);
        let a = classify_cell(&f, &cell, rule).unwrap();
        let b = classify_cell(&g, &mirrored, rule).unwrap();
        prop_assert_eq!(a.classification, b.classification);
        let mut va = a.values.clone();
        let mut vb = b.values.clone();
        va.sort_by(f64::total_cmp);
        vb.sort_by(f64::total_cmp);
        // 1 − x is rounded, so samples agree to round-off only
        for (x, y) in va.iter().zip(&vb) {
            prop_assert!((x - y).abs() <= 1e-13);
        }
    }

    #[test]
    fn cut_cells_have_a_sign_change_or_a_zero(
        (r1, r2, phi) in ellipse_params(),
        o in prop::array::uniform3(0.0..0.8f64), size in 0.01..0.2f64, dim in 2usize..=3,
    ) {
        let f = make_ellipsoid_exclusion(r1, r2, phi, dim).unwrap();
        let cell = BoxCell { level: 1, origin: o, size, dim };
        let rule = SignRule::for_element(1.0);
        let s = classify_cell(&f, &cell, rule).unwrap();
        if s.classification == Classification::Cut {
            let all: Vec<f64> = s.values.iter().copied().chain([s.center]).collect();
            let pos = all.iter().any(|&v| v > rule.eps);
            let neg = all.iter().any(|&v| v < -rule.eps);
            let zero = all.iter().any(|&v| v.abs() <= rule.eps);
            prop_assert!((pos && neg) || zero);
        }
    }

    #[test]
    fn full_turn_leaves_the_field_unchanged(
        (r1, r2, phi) in ellipse_params(), x in prop::array::uniform3(-1.0..2.0f64),
    ) {
        let a = make_ellipsoid_exclusion(r1, r2, phi, 3).unwrap();
        let b = make_ellipsoid_exclusion(r1, r2, phi + 360.0, 3).unwrap();
        let (va, vb) = (a.eval(&x), b.eval(&x));
        prop_assert!((va - vb).abs() <= 1e-12 * va.abs().max(1.0));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn deeper_partitions_change_volume_by_at_most_the_cut_leaves(
        (r1, r2, phi) in ellipse_params(), dim in 2usize..=3, depth in 1u32..=3,
    ) {
        if let (Some(a), Some(b)) = (ellipse(r1, r2, phi, dim, depth), ellipse(r1, r2, phi, dim, depth + 1)) {
            let leaves: f64 = a.cut_leaves.iter().map(|c| c.volume()).sum();
            prop_assert!((partition_volume(&a) - partition_volume(&b)).abs() <= leaves * (1.0 + 1e-12));
        }
    }

    #[test]
    fn partitions_are_deterministic((r1, r2, phi) in ellipse_params(), dim in 2usize..=3) {
        if let Some(a) = ellipse(r1, r2, phi, dim, 3) {
            let b = ellipse(r1, r2, phi, dim, 3).unwrap();
            prop_assert_eq!(a.to_json(), b.to_json());
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn tessellation_partitions_the_cell_2d(v in prop::array::uniform4(-1.0..1.0f64)) {
        prop_assume!(v.iter().any(|&x| x > 0.0) && v.iter().any(|&x| x < 0.0));
        let t = tessellate(&v, &BoxCell::unit(2), SignRule::for_element(1.0)).unwrap();
        prop_assert!((t.interior_volume() + t.exterior_volume() - 1.0).abs() < 1e-10);
    }

    #[test]
    fn tessellation_partitions_the_cell_3d(v in prop::array::uniform8(-1.0..1.0f64)) {
        prop_assume!(v.iter().any(|&x| x > 0.0) && v.iter().any(|&x| x < 0.0));
        let t = tessellate(&v, &BoxCell::unit(3), SignRule::for_element(1.0)).unwrap();
        prop_assert!((t.interior_volume() + t.exterior_volume() - 1.0).abs() < 1e-10);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn affine_fields_are_tessellated_exactly(
        n in prop::array::uniform3(prop_oneof![-1.0..-0.1f64, 0.1..1.0f64]), t in 0.05..0.95f64, dim in 2usize..=3,
    ) {
        let n = &n[..dim];
        // offset through an interior point so the plane always cuts
        let c: f64 = n.iter().map(|ni| ni * t).sum();
        let f = Affine { normal: point(n), offset: c, dim };
        let cell = BoxCell::unit(dim);
        let values: Vec<f64> = (0..cell.n_corners()).map(|i| f.eval(&cell.corner(i))).collect();
        let rule = SignRule::for_element(1.0);
        let r = tessellate(&values, &cell, rule).unwrap();
        let exact = 1.0 - half_space_volume(n, c);
        prop_assert!((r.interior_volume() - exact).abs() < 1e-12, "{} vs {}", r.interior_volume(), exact);
        for facet in &r.boundary_facets {
            for x in facet {
                prop_assert!(f.eval(x).abs() <= rule.eps.max(1e-14));
            }
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn rule_entries_are_nested((r1, r2, phi) in ellipse_params(), dim in 2usize..=3, seed in 0u64..1000) {
        let Some(p) = ellipse(r1, r2, phi, dim, 2) else { return Ok(()) };
        let cells = p.cells();
        let c = &cells[seed as usize % cells.len()];
        let fam = RuleFamily::of(c);
        for i in 0..fam.max_index().min(4) {
            let q = fam.degree(i);
            let oracle = reference_cell_rule(c, q);
            let lo = cell_rule(c, i, BoxRuleKind::Gauss).unwrap();
            let hi = cell_rule(c, i + 1, BoxRuleKind::Gauss).unwrap();
            // a monomial of total degree q with mixed exponents
            let e = [q / dim, q / dim + q % dim, 0];
            let f = |x: &[f64; 3]| (0..dim).map(|r| (x[r] + 0.3).powi(e[r] as i32)).product::<f64>();
            let want = oracle.integrate(f);
            prop_assert!((lo.integrate(f) - want).abs() <= 1e-12 * want.abs().max(1e-3), "{fam:?} {i}");
            prop_assert!((hi.integrate(f) - want).abs() <= 1e-12 * want.abs().max(1e-3), "{fam:?} {i}");
        }
    }

    #[test]
    fn scheme_totals_and_weights(
        (r1, r2, phi) in ellipse_params(), dim in 2usize..=3, seed in prop::collection::vec(0usize..5, 64),
    ) {
        let Some(p) = ellipse(r1, r2, phi, dim, 2) else { return Ok(()) };
        let cells = p.cells();
        let idx = RuleIndexList {
            indices: cells.iter().enumerate().map(|(i, c)| seed[i % seed.len()].min(RuleFamily::of(c).max_index())).collect(),
        };
        let s = assemble_scheme(&p, &idx, BoxRuleKind::Gauss).unwrap();
        let sizes: usize = cells.iter().zip(&idx.indices).map(|(c, &i)| rule_size(c, i).unwrap()).sum();
        prop_assert_eq!(s.total(), sizes);
        for (id, c) in cells.iter().enumerate() {
            let w: f64 = s.weights[s.cell_range(id)].iter().sum();
            prop_assert!((w - c.volume()).abs() <= 1e-12 * c.volume());
        }
    }

    #[test]
    fn error_does_not_depend_on_the_basis((r1, r2, phi) in ellipse_params(), k in 1usize..=4, i in 0usize..2) {
        let Some(p) = ellipse(r1, r2, phi, 2, 3) else { return Ok(()) };
        let s = assemble_scheme(&p, &RuleIndexList::uniform(p.n_cells(), i), BoxRuleKind::Gauss).unwrap();
        let leg = PolynomialSpace::new(k, 2, Norm::H1);
        let mono = PolynomialSpace { basis: Basis::Monomial, ..leg };
        let (Some(ma), Some(mb)) = (model(&p, leg), model(&p, mono)) else { return Ok(()) };
        let (a, b) = (ma.evaluate(&s).e_total, mb.evaluate(&s).e_total);
        prop_assert!((a - b).abs() <= 1e-8, "{a} vs {b}");
    }

    #[test]
    fn larger_spaces_have_larger_errors((r1, r2, phi) in ellipse_params(), k in 1usize..=6, l2 in any::<bool>()) {
        let Some(p) = ellipse(r1, r2, phi, 2, 3) else { return Ok(()) };
        let s = assemble_scheme(&p, &RuleIndexList::zeros(&p), BoxRuleKind::Gauss).unwrap();
        let norm = if l2 { Norm::L2 } else { Norm::H1 };
        let (Some(ma), Some(mb)) = (model(&p, PolynomialSpace::new(k, 2, norm)), model(&p, PolynomialSpace::new(k + 1, 2, norm)))
        else {
            return Ok(());
        };
        let (a, b) = (ma.evaluate(&s).e_total, mb.evaluate(&s).e_total);
        prop_assert!(b >= a * (1.0 - 1e-9), "{a} > {b}");
    }

    #[test]
    fn scaling_the_gramian((r1, r2, phi) in ellipse_params(), j in -10i32..=10) {
        // powers of two scale G without rounding, isolating the algebra from conditioning
        let c = 2f64.powi(j);
        let Some(p) = ellipse(r1, r2, phi, 2, 3) else { return Ok(()) };
        let Some(m) = model(&p, PolynomialSpace::new(4, 2, Norm::H1)) else { return Ok(()) };
        let idx = RuleIndexList::zeros(&p);
        let s = assemble_scheme(&p, &idx, BoxRuleKind::Gauss).unwrap();
        let rep = m.evaluate(&s);
        let (e, v) = worst_case_error(&rep.xi, &rep.xi_bar, &Cholesky::factor(&m.gramian.scaled(c * c)).unwrap());
        prop_assert!((e * c - rep.e_total).abs() <= 1e-10 * rep.e_total);
        let cells: Vec<SubCell> = p.cells();
        let argmax = |v: &[f64]| {
            let ind = indicators(&localized_errors(&m, &s, v), &idx, &cells);
            (0..cells.len()).fold(0, |b, i| if ind.values[i] > ind.values[b] { i } else { b })
        };
        prop_assert_eq!(argmax(&v.unwrap()), argmax(rep.worst_coeffs.as_ref().unwrap()));
    }
}

#[test]
fn exact_schemes_have_no_error() {
    for dim in [2usize, 3] {
        let p = partition_element(&FnField::new(dim, |_| 1.0), &BoxCell::unit(dim), 2).unwrap();
        for k in 1..=5 {
            let m = ErrorModel::new(&p, PolynomialSpace::new(k, dim, Norm::H1)).unwrap();
            // k + 1 points per direction
            let s = assemble_scheme(&p, &RuleIndexList::uniform(1, k), BoxRuleKind::Gauss).unwrap();
            assert!(m.evaluate(&s).e_total <= 1e-13);
        }
    }
}

/// Replays a trace and checks each mark against freshly computed indicators.
fn check_marks(p: &Partition, m: &ErrorModel, marking: Marking, budget: usize) -> Result<(), TestCaseError> {
    let t = optimize(p, m, OptimizeOptions::new(marking, StopRule::Budget(budget))).unwrap();
    prop_assert!(t.last().e_total <= t.steps[0].e_total);
    let cells = p.cells();
    let mut idx = RuleIndexList::zeros(p);
    for st in &t.steps[1..] {
        let s = assemble_scheme(p, &idx, BoxRuleKind::Gauss).unwrap();
        let rep = m.evaluate(&s);
        let ind = indicators(&rep.per_cell_error, &idx, &cells);
        let live: Vec<usize> = (0..cells.len()).filter(|&i| !ind.depleted[i]).collect();
        match st.marked {
            Marked::Cell(id) => {
                let best = live.iter().map(|&i| ind.values[i]).fold(0.0, f64::max);
                prop_assert!(ind.values[id] >= best * (1.0 - 1e-9));
                idx.indices[id] += 1;
            }
            Marked::Level(l) => {
                let mut sums = vec![0.0; p.max_depth as usize + 2];
                for &i in &live {
                    sums[cells[i].level() as usize] += ind.values[i];
                }
                let best = sums.iter().copied().fold(0.0, f64::max);
                prop_assert!(sums[l as usize] >= best * (1.0 - 1e-9));
                for &i in &live {
                    if cells[i].level() == l {
                        idx.indices[i] += 1;
                    }
                }
            }
            Marked::Initial => prop_assert!(false, "initial marker after step 0"),
        }
    }
    prop_assert_eq!(&idx, &t.final_idx);
    Ok(())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn marks_follow_the_indicators((r1, r2, phi) in ellipse_params(), level in any::<bool>()) {
        let Some(p) = ellipse(r1, r2, phi, 2, 2) else { return Ok(()) };
        let Some(m) = model(&p, PolynomialSpace::new(5, 2, Norm::H1)) else { return Ok(()) };
        let start = assemble_scheme(&p, &RuleIndexList::zeros(&p), BoxRuleKind::Gauss).unwrap().total();
        check_marks(&p, &m, if level { Marking::Level } else { Marking::SubCell }, 4 * start)?;
    }

    #[test]
    fn reruns_give_identical_traces((r1, r2, phi) in ellipse_params()) {
        let Some(p) = ellipse(r1, r2, phi, 2, 3) else { return Ok(()) };
        let Some(m) = model(&p, PolynomialSpace::new(4, 2, Norm::H1)) else { return Ok(()) };
        let o = OptimizeOptions::new(Marking::SubCell, StopRule::Budget(300));
        prop_assert_eq!(optimize(&p, &m, o).unwrap().to_csv(), optimize(&p, &m, o).unwrap().to_csv());
    }

    #[test]
    fn predicted_total_is_the_row_sum(
        d in 2usize..=3, rho in 1u32..=8, eta_s in 0.01..20.0f64, eta in 0.01..0.99f64,
        q in prop::collection::vec(1.0..100.0f64, 9), t_bar in 1.0..10.0f64,
    ) {
        let inp = ScalingInputs { d, rho_max: rho, eta_s, eta, q_bar: q[..=rho as usize].to_vec(), t_bar, q_line: 2.0 };
        let p = predict_counts(&inp).unwrap();
        prop_assert_eq!(p.n_total, p.n.iter().sum::<f64>());
        prop_assert_eq!(p.n.len(), rho as usize + 1);
    }
}

use tlm_forge_core::ltlm::{
    im_profile, is_profile_left_part, r_access_plus_contact, r_no_spacer_ltlm, r_total_partitioned, rt_ltlm, slope_ltlm, Rail,
};
use tlm_forge_core::oracle::{build_network, current_profile, richardson_refine, solve, RegionMap};
use tlm_forge_core::params::{transfer_length, GuardThresholds, LtlmGeometry, RtlmGeometry, SheetStack, UM};
use tlm_forge_core::rtlm::rt_rtlm;
use tlm_forge_core::Warning;

fn t1() -> SheetStack {
    SheetStack::from_lab_units(100.0, 10.0, 1.1e-9, 10.0).unwrap()
}

fn rel(a: f64, b: f64) -> f64 {
    ((a - b) / b).abs()
}

const LC: f64 = 5.0 * UM;
const L0: f64 = 14.0 * UM;

#[test]
fn no_spacer_matches_closed_form() {
    let s = t1();
    let cf = r_no_spacer_ltlm(&s, LC, L0, &GuardThresholds::default()).value;
    assert!(rel(cf, 21.824) < 5e-5);
    let r = richardson_refine(&s, &RegionMap::no_spacer(LC, L0).unwrap(), 12_000).unwrap();
    assert!(rel(r.value, cf) < 1e-4, "{} vs {cf}", r.value);
    assert!(r.warnings.is_empty());
}

#[test]
fn partitioned_matches_closed_form_loosely() {
    let s = t1();
    let cf = r_total_partitioned(&s, LC, L0, &GuardThresholds::default()).value;
    let r = richardson_refine(&s, &RegionMap::partitioned(LC, L0).unwrap(), 20_000).unwrap();
    assert!(rel(r.value, cf) < 1e-2, "{} vs {cf}", r.value);
    // the residual is the missing vertical drop at the two injection ends
    let lt = transfer_length(&s).meters();
    let two_rail = cf + 2.0 * 10.0 * 10.0 * lt / (s.width() * 110.0) + 2.0 * 100.0 * 10.0 * lt / (s.width() * 110.0);
    assert!(rel(r.value, two_rail) < 1e-6, "{} vs {two_rail}", r.value);
}

#[test]
fn ladder_test_structure_at_full_ladder_is_partitioned() {
    let s = t1();
    let a = richardson_refine(&s, &RegionMap::ltlm_test(LC, L0, L0).unwrap(), 20_000).unwrap();
    let b = richardson_refine(&s, &RegionMap::partitioned(LC, L0).unwrap(), 20_000).unwrap();
    assert_eq!(a.value, b.value);
    let geom = LtlmGeometry::from_ladder(LC, L0, L0).unwrap();
    let cf = rt_ltlm(&s, &geom, slope_ltlm(&s), &GuardThresholds::default()).value;
    assert!(rel(a.value, cf) < 1e-2);
}

#[test]
fn ladder_sweep_slope_matches_closed_form() {
    let s = t1();
    let at = |lg: f64| richardson_refine(&s, &RegionMap::ltlm_test(LC, L0, lg).unwrap(), 20_000).unwrap().value;
    let slope = (at(L0) - at(L0 / 2.0)) / (L0 / 2.0);
    assert!(rel(slope, slope_ltlm(&s)) < 1e-3, "{slope:e}");
}

#[test]
fn metal_profile_in_full_metal_structure() {
    let s = t1();
    let lt = transfer_length(&s).meters();
    let net = build_network(&s, &RegionMap::no_spacer(LC, L0).unwrap(), 48_000).unwrap();
    let sol = solve(&net).unwrap();
    let p = current_profile(&sol, Rail::Metal);
    let expect = im_profile(&s, lt).unwrap();
    assert!(rel(expect, 0.942534) < 1e-6);
    // measured from the injecting terminal, and mirrored at the far end
    assert!(rel(p.at(lt), expect) < 1e-3, "{}", p.at(lt));
    assert!(rel(p.at(sol.total_length() - lt), expect) < 1e-3);
    assert!(rel(p.at(0.5 * sol.total_length()), 100.0 / 110.0) < 1e-9);
    assert_eq!(p.at(0.0), 1.0);
}

#[test]
fn transfer_length_from_profile_decay() {
    let s = t1();
    let lt = transfer_length(&s).meters();
    let net = build_network(&s, &RegionMap::no_spacer(LC, L0).unwrap(), 48_000).unwrap();
    let p = current_profile(&solve(&net).unwrap(), Rail::Metal);
    let (split_s, split_m) = (100.0 / 110.0, 10.0 / 110.0);
    let x = 2.0 * lt;
    let measured = -x / ((p.at(x) - split_s) / split_m).ln();
    assert!(rel(measured, lt) < 1e-3, "{measured:e} vs {lt:e}");
}

#[test]
fn semiconductor_profile_in_partitioned_contact() {
    let s = t1();
    let lt = transfer_length(&s).meters();
    let g = GuardThresholds::default();
    let net = build_network(&s, &RegionMap::partitioned(LC, L0).unwrap(), 48_000).unwrap();
    let p = current_profile(&solve(&net).unwrap(), Rail::Semiconductor);
    let expect = is_profile_left_part(&s, LC, lt, &g).unwrap().value;
    assert!(rel(p.at(lt), expect) < 1e-3, "{}", p.at(lt));
    let near_partition = is_profile_left_part(&s, LC, LC - lt, &g).unwrap().value;
    assert!(rel(p.at(LC - lt), near_partition) < 1e-3, "{}", p.at(LC - lt));
    assert!(p.at(0.0) == 0.0);
}

#[test]
fn contact_region_semiconductor_drop() {
    let s = t1();
    let net = build_network(&s, &RegionMap::partitioned(LC, L0).unwrap(), 48_000).unwrap();
    let sol = solve(&net).unwrap();
    let k = (LC / sol.dx).round() as usize;
    let drop = sol.rail_potential(0, Rail::Semiconductor, true).unwrap() - sol.rail_potential(k, Rail::Semiconductor, true).unwrap();
    let cf = r_access_plus_contact(&s, LC, &GuardThresholds::default()).value;
    assert!(rel(drop, cf) < 1e-2, "{drop} vs {cf}");
}

#[test]
fn rtlm_structure_against_two_rail_form() {
    // The RTLM closed form treats the metal arms as bare metal. The oracle
    // also carries current in the semiconductor under them, which the
    // two-rail expression below accounts for.
    let s = t1();
    let lt = transfer_length(&s).meters();
    let (rs, rm, w, sum) = (100.0, 10.0, s.width(), 110.0);
    for ls in [0.5, 2.0, 4.0] {
        let geom = RtlmGeometry::from_spacer(ls * UM, 12.0 * UM).unwrap();
        let map = RegionMap::rtlm_spacer(geom.l_c(), geom.l_s()).unwrap();
        let oracle = richardson_refine(&s, &map, 20_000).unwrap().value;
        let two_rail = 2.0 * (rs * rm * geom.l_c() / (w * sum) + (rs * rs + rm * rm) * lt / (w * sum)) + rs * geom.l_s() / w;
        assert!(rel(oracle, two_rail) < 1e-6, "l_s = {ls}: {oracle} vs {two_rail}");
        let gap = rel(rt_rtlm(&s, &geom), oracle);
        assert!(gap > 5e-3 && gap < 0.1, "l_s = {ls}: gap {gap}");
    }
}

#[test]
fn rtlm_deembedded_line_from_oracle() {
    let s = t1();
    let l0 = 12.0 * UM;
    let deembed = richardson_refine(&s, &RegionMap::full_metal(l0).unwrap(), 20_000).unwrap().value;
    let at = |ls: f64| {
        let geom = RtlmGeometry::from_spacer(ls, l0).unwrap();
        richardson_refine(&s, &RegionMap::rtlm_spacer(geom.l_c(), geom.l_s()).unwrap(), 20_000).unwrap().value - deembed
    };
    // the shunt under the metal arms tilts the line from (r_shs − r_shm)/W to r_shs²/(W·Σ)
    let slope = (at(4.0 * UM) - at(1.0 * UM)) / (3.0 * UM);
    assert!(rel(slope, 100.0 * 100.0 / (s.width() * 110.0)) < 1e-6, "{slope:e}");
    assert!(rel(slope, 9e6) > 5e-3);
    let line = at(2.0 * UM);
    assert!(rel(line, 18.757) < 1e-3, "{line}");
}

#[test]
fn coarse_grid_is_flagged() {
    let s = t1();
    let net = build_network(&s, &RegionMap::no_spacer(LC, L0).unwrap(), 500).unwrap();
    assert!(net.warnings.iter().any(|w| matches!(w, Warning::CoarseGrid { .. })));
}

#[test]
fn refinement_converges_from_below_on_aligned_grids() {
    let s = t1();
    let r = richardson_refine(&s, &RegionMap::partitioned(LC, L0).unwrap(), 20_000).unwrap();
    assert_eq!(r.n_base % 48, 0);
    assert!(r.error_estimate < 1e-4 * r.value);
    assert!((r.value - r.fine).abs() <= r.error_estimate);
}

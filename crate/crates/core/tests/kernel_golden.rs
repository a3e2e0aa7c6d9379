use volterra_clt_core::kernels::kernel_eval;
use volterra_clt_core::KernelSpec;

// Reference values computed at 40 significant digits with mpmath.
const GOLDEN: &str = include_str!("data/kernel_golden.csv");

#[test]
fn kernel_values_match_high_precision_reference() {
    let mut checked = 0;
    for line in GOLDEN.lines().skip(1) {
        let f: Vec<&str> = line.split(',').collect();
        let h: f64 = f[1].parse().unwrap();
        let (t, s, want): (f64, f64, f64) = (f[2].parse().unwrap(), f[3].parse().unwrap(), f[4].parse().unwrap());
        let k = match f[0] {
            "rl" => KernelSpec::riemann_liouville(h),
            "fbm" => KernelSpec::fbm(h),
            other => panic!("unknown kind {other}"),
        }
        .unwrap();
        let got = kernel_eval(&k, t, s).unwrap();
        let rel = ((got - want) / want).abs();
        assert!(rel < 1e-11, "{line}: got {got}, rel {rel:e}");
        checked += 1;
    }
    assert_eq!(checked, 112);
}

//! Adaptive Gauss-Kronrod (7/15) quadrature used as a test oracle.
#![allow(dead_code)]

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

struct Piece {
    a: f64,
    b: f64,
    value: f64,
    err: f64,
}

fn gk15<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> Piece {
    let centre = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(centre);
    let mut kronrod = WGK[7] * fc;
    let mut gauss = WG[3] * fc;
    for j in 0..7 {
        let dx = half * XGK[j];
        let pair = f(centre - dx) + f(centre + dx);
        kronrod += WGK[j] * pair;
        if j % 2 == 1 {
            gauss += WG[j / 2] * pair;
        }
    }
    Piece {
        a,
        b,
        value: kronrod * half,
        err: ((kronrod - gauss) * half).abs(),
    }
}

/// Integral of `f` over `[a, b]` to relative tolerance `rel_tol`.
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, rel_tol: f64) -> f64 {
    let mut pieces = vec![gk15(&f, a, b)];
    for _ in 0..20_000 {
        let total: f64 = pieces.iter().map(|p| p.value).sum();
        let err: f64 = pieces.iter().map(|p| p.err).sum();
        if err <= rel_tol * total.abs() || err < 1e-300 {
            break;
        }
        let (worst, _) = pieces
            .iter()
            .enumerate()
            .max_by(|x, y| x.1.err.total_cmp(&y.1.err))
            .unwrap();
        let p = pieces.swap_remove(worst);
        let mid = 0.5 * (p.a + p.b);
        pieces.push(gk15(&f, p.a, mid));
        pieces.push(gk15(&f, mid, p.b));
    }
    pieces.iter().map(|p| p.value).sum()
}

/// `ln(e^x Γ(a, x))` by quadrature.
///
/// With `t = x e^u`, `e^x Γ(a, x) = x^a ∫_0^∞ exp(a u - x (e^u - 1)) du`. The
/// exponent is shifted by its maximum so nothing overflows.
pub fn ln_scaled_upper_gamma(a: f64, x: f64) -> f64 {
    let phase = |u: f64| a * u - x * u.exp_m1();
    let peak = if a > x { (a / x).ln() } else { 0.0 };
    let shift = phase(peak);
    // March right from the peak with a step matched to the local decay
    // rate, doubling it, until the integrand is below e^-60 of its peak.
    let mut knots = vec![0.0];
    if peak > 0.0 {
        knots.push(peak);
    }
    let mut step = 1.0 / (1.0 + x * peak.exp());
    let mut end = peak;
    while phase(end) - shift > -60.0 {
        end += step;
        knots.push(end);
        step *= 2.0;
    }
    let integral: f64 = knots
        .windows(2)
        .map(|w| integrate(|u| (phase(u) - shift).exp(), w[0], w[1], 1e-14))
        .sum();
    a * x.ln() + shift + integral.ln()
}

/// `ln Γ(a, x)` by quadrature.
pub fn ln_upper_gamma(a: f64, x: f64) -> f64 {
    ln_scaled_upper_gamma(a, x) - x
}

/// `E[f(x)]` for `x ~ Gamma(m, 1/d1)`, by quadrature in `v = sqrt(d1 x)`.
pub fn gamma_expectation<F: Fn(f64) -> f64>(f: F, m: f64, d1: f64, ln_gamma_m: f64) -> f64 {
    let density = |v: f64| {
        if v == 0.0 {
            return if m == 0.5 { 2.0 * (-ln_gamma_m).exp() } else { 0.0 };
        }
        let y = v * v;
        2.0 * ((2.0 * m - 1.0) * v.ln() - y - ln_gamma_m).exp()
    };
    let top = (m + 40.0 * m.sqrt() + 80.0).sqrt();
    let knots = [0.0, 0.25 * top, 0.5 * top, top];
    knots
        .windows(2)
        .map(|w| integrate(|v| f(v * v / d1) * density(v), w[0], w[1], 1e-13))
        .sum()
}

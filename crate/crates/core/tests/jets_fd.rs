//! Jet partials against central finite differences of the same expression
//! evaluated in double-double arithmetic.

use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;
use twofloat::TwoFloat;
use weyl_core::Jet3;

const NVARS: usize = 3;

#[derive(Debug, Clone)]
enum Expr {
    Var(usize),
    Const(f64),
    Add(Box<Expr>, Box<Expr>),
    Sub(Box<Expr>, Box<Expr>),
    Mul(Box<Expr>, Box<Expr>),
    /// `a / (2 + b²)`
    Div(Box<Expr>, Box<Expr>),
    /// `exp(x / 2)`
    Exp(Box<Expr>),
    Sin(Box<Expr>),
    Cos(Box<Expr>),
    /// `ln(1 + x²)`
    Ln(Box<Expr>),
    Pow(Box<Expr>, i32),
}

fn random_expr(rng: &mut ChaCha8Rng, depth: usize) -> Expr {
    if depth == 0 || rng.random_range(0..5) == 0 {
        return if rng.random_range(0..4) == 0 {
            Expr::Const(rng.random_range(-2.0..2.0))
        } else {
            Expr::Var(rng.random_range(0..NVARS))
        };
    }
    let op = rng.random_range(0..9);
    let mut sub = || Box::new(random_expr(rng, depth - 1));
    match op {
        0 => Expr::Add(sub(), sub()),
        1 => Expr::Sub(sub(), sub()),
        2 => Expr::Mul(sub(), sub()),
        3 => Expr::Div(sub(), sub()),
        4 => Expr::Exp(sub()),
        5 => Expr::Sin(sub()),
        6 => Expr::Cos(sub()),
        7 => Expr::Ln(sub()),
        _ => {
            let k = if depth.is_multiple_of(2) { 2 } else { 3 };
            Expr::Pow(sub(), k)
        }
    }
}

fn eval_jet(e: &Expr, x: &[Jet3<f64>]) -> Jet3<f64> {
    let c = |v: f64| Jet3::constant(NVARS, v);
    match e {
        Expr::Var(i) => x[*i].clone(),
        Expr::Const(v) => c(*v),
        Expr::Add(a, b) => eval_jet(a, x) + eval_jet(b, x),
        Expr::Sub(a, b) => eval_jet(a, x) - eval_jet(b, x),
        Expr::Mul(a, b) => eval_jet(a, x) * eval_jet(b, x),
        Expr::Div(a, b) => {
            let bb = eval_jet(b, x);
            let den = bb.clone() * bb + c(2.0);
            eval_jet(a, x).checked_div(&den).unwrap()
        }
        Expr::Exp(a) => eval_jet(a, x).scale(0.5).exp(),
        Expr::Sin(a) => eval_jet(a, x).sin(),
        Expr::Cos(a) => eval_jet(a, x).cos(),
        Expr::Ln(a) => {
            let v = eval_jet(a, x);
            (v.clone() * v + c(1.0)).ln().unwrap()
        }
        Expr::Pow(a, k) => eval_jet(a, x).powi(*k).unwrap(),
    }
}

/// Quotient refined by two Newton steps; the library's division loses
/// precision that third-order differences cannot tolerate.
fn dd_div(a: TwoFloat, b: TwoFloat) -> TwoFloat {
    let mut q = TwoFloat::from(a.hi() / b.hi());
    for _ in 0..2 {
        let r = a - q * b;
        q += r.hi() / b.hi();
    }
    q
}

fn dd_exp(x: TwoFloat) -> TwoFloat {
    let r = x * (1.0 / 256.0);
    let mut term = TwoFloat::from(1.0);
    let mut sum = TwoFloat::from(1.0);
    for k in 1..25 {
        term = term * r * (1.0 / k as f64);
        sum += term;
    }
    for _ in 0..8 {
        sum = sum * sum;
    }
    sum
}

fn dd_ln(x: TwoFloat) -> TwoFloat {
    let mut y = TwoFloat::from(x.hi().ln());
    for _ in 0..3 {
        y = y + dd_div(x, dd_exp(y)) - 1.0;
    }
    y
}

fn eval_dd(e: &Expr, x: &[TwoFloat]) -> TwoFloat {
    match e {
        Expr::Var(i) => x[*i],
        Expr::Const(v) => TwoFloat::from(*v),
        Expr::Add(a, b) => eval_dd(a, x) + eval_dd(b, x),
        Expr::Sub(a, b) => eval_dd(a, x) - eval_dd(b, x),
        Expr::Mul(a, b) => eval_dd(a, x) * eval_dd(b, x),
        Expr::Div(a, b) => {
            let bb = eval_dd(b, x);
            dd_div(eval_dd(a, x), bb * bb + 2.0)
        }
        Expr::Exp(a) => dd_exp(eval_dd(a, x) * 0.5),
        Expr::Sin(a) => eval_dd(a, x).sin(),
        Expr::Cos(a) => eval_dd(a, x).cos(),
        Expr::Ln(a) => {
            let v = eval_dd(a, x);
            dd_ln(v * v + 1.0)
        }
        Expr::Pow(a, k) => {
            let v = eval_dd(a, x);
            (1..*k).fold(v, |acc, _| acc * v)
        }
    }
}

/// Product of central-difference operators `D_i`, one per entry of `dirs`.
fn central(e: &Expr, x0: &[f64], dirs: &[usize], h: f64) -> f64 {
    let k = dirs.len();
    let mut total = TwoFloat::from(0.0);
    for mask in 0..(1u32 << k) {
        let mut x: Vec<TwoFloat> = x0.iter().map(|&v| TwoFloat::from(v)).collect();
        let mut sign = 1.0;
        for (b, &d) in dirs.iter().enumerate() {
            if mask & (1 << b) != 0 {
                x[d] -= h;
                sign = -sign;
            } else {
                x[d] += h;
            }
        }
        total += eval_dd(e, &x) * sign;
    }
    total.hi() / (2.0 * h).powi(k as i32)
}

fn close(ad: f64, fd: f64) -> bool {
    (ad - fd).abs() <= 1e-6 * ad.abs().max(1.0)
}

#[test]
fn partials_match_finite_differences_on_random_expressions() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut checked = 0;
    while checked < 100 {
        let e = random_expr(&mut rng, 4);
        let x0: Vec<f64> = (0..NVARS).map(|_| rng.random_range(-0.8..0.8)).collect();
        let vars: Vec<Jet3<f64>> = (0..NVARS).map(|i| Jet3::variable(i, x0[i], NVARS).unwrap()).collect();
        let jet = eval_jet(&e, &vars);
        if !jet.is_finite() || jet.value().abs() > 1e6 {
            continue;
        }
        let xd: Vec<TwoFloat> = x0.iter().map(|&v| TwoFloat::from(v)).collect();
        assert!(close(jet.value(), eval_dd(&e, &xd).hi()), "value of {e:?}");
        for i in 0..NVARS {
            let fd = central(&e, &x0, &[i], 1e-5);
            assert!(close(jet.d1(i), fd), "d{i} of {e:?}: {} vs {fd}", jet.d1(i));
            for j in 0..NVARS {
                let fd = central(&e, &x0, &[i, j], 1e-5);
                assert!(close(jet.d2(i, j), fd), "d{i}{j} of {e:?}: {} vs {fd}", jet.d2(i, j));
                for k in 0..NVARS {
                    let fd = central(&e, &x0, &[i, j, k], 1e-4);
                    assert!(
                        close(jet.d3(i, j, k), fd),
                        "d{i}{j}{k} of {e:?}: {} vs {fd}",
                        jet.d3(i, j, k)
                    );
                }
            }
        }
        checked += 1;
    }
}

#[test]
fn exp_at_half_has_equal_derivatives() {
    let x = Jet3::variable(0, 0.5, 1).unwrap().exp();
    let e = 0.5f64.exp();
    for v in [x.value(), x.d1(0), x.d2(0, 0), x.d3(0, 0, 0)] {
        assert!((v - e).abs() <= 1e-15 * e);
    }
    let h = 1e-5f64;
    let fd1 = ((0.5 + h).exp() - (0.5 - h).exp()) / (2.0 * h);
    assert!((fd1 - e).abs() <= 1e-8 * e);
}

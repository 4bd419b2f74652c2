//! Integer-order Bessel functions of real, non-negative argument.
//!
//! `J_n` comes from Miller's backward recurrence normalized with
//! `J0 + 2 sum J_2k = 1`. `Y0`/`Y1` use the ascending series for small
//! arguments and Hankel's asymptotic expansion beyond [`ASYMPTOTIC_FROM`];
//! higher orders follow by upward recurrence, which is stable for `Y_n`.

use std::f64::consts::{FRAC_2_PI, PI};

use num_complex::Complex64;

const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;
const ASYMPTOTIC_FROM: f64 = 12.0;

/// `J_0(x) ..= J_nmax(x)`.
pub fn bessel_j_all(nmax: usize, x: f64) -> Vec<f64> {
    assert!(x >= 0.0, "bessel_j_all: negative argument {x}");
    let mut out = vec![0.0; nmax + 1];
    if x == 0.0 {
        out[0] = 1.0;
        return out;
    }
    let top = (nmax as f64).max(x);
    let mut start = (top + 20.0 + 10.0 * top.sqrt()).ceil() as usize;
    start += start % 2;

    let mut next = 0.0; // j_{k+1}
    let mut cur = 1e-300; // j_k
    let mut norm = 0.0;
    for k in (1..=start).rev() {
        let prev = 2.0 * k as f64 / x * cur - next;
        next = cur;
        cur = prev;
        // cur now holds j_{k-1}
        let order = k - 1;
        if order <= nmax {
            out[order] = cur;
        }
        if order % 2 == 0 && order > 0 {
            norm += 2.0 * cur;
        }
        if cur.abs() > 1e250 {
            cur *= 1e-250;
            next *= 1e-250;
            norm *= 1e-250;
            for v in out.iter_mut() {
                *v *= 1e-250;
            }
        }
    }
    norm += cur;
    for v in out.iter_mut() {
        *v /= norm;
    }
    out
}

/// `Y_0(x) ..= Y_nmax(x)` for `x > 0`.
pub fn bessel_y_all(nmax: usize, x: f64) -> Vec<f64> {
    assert!(x > 0.0, "bessel_y_all: non-positive argument {x}");
    let (y0, y1) = if x < ASYMPTOTIC_FROM {
        let j = bessel_j_all(1, x);
        (y0_series(x, j[0]), y1_series(x, j[1]))
    } else {
        let (_, y0) = hankel_asymptotic(0, x);
        let (_, y1) = hankel_asymptotic(1, x);
        (y0, y1)
    };
    let mut out = Vec::with_capacity(nmax + 1);
    out.push(y0);
    if nmax >= 1 {
        out.push(y1);
    }
    for n in 1..nmax {
        let v = 2.0 * n as f64 / x * out[n] - out[n - 1];
        out.push(v);
    }
    out
}

/// Hankel functions of the first kind `H_n = J_n + i Y_n`, orders `0..=nmax`.
pub fn hankel1_all(nmax: usize, x: f64) -> Vec<Complex64> {
    bessel_j_all(nmax, x)
        .into_iter()
        .zip(bessel_y_all(nmax, x))
        .map(|(j, y)| Complex64::new(j, y))
        .collect()
}

pub fn bessel_j(n: i32, x: f64) -> f64 {
    let v = bessel_j_all(n.unsigned_abs() as usize, x)[n.unsigned_abs() as usize];
    if n < 0 && n % 2 != 0 {
        -v
    } else {
        v
    }
}

pub fn bessel_y(n: i32, x: f64) -> f64 {
    let v = bessel_y_all(n.unsigned_abs() as usize, x)[n.unsigned_abs() as usize];
    if n < 0 && n % 2 != 0 {
        -v
    } else {
        v
    }
}

/// Derivative from the order-neighbour table: `C_n' = (C_{n-1} - C_{n+1})/2`,
/// with `C_0' = -C_1`. `table` must hold orders `0..=n+1`.
pub fn derivative<T>(table: &[T], n: usize) -> T
where
    T: Copy
        + std::ops::Sub<Output = T>
        + std::ops::Neg<Output = T>
        + std::ops::Mul<f64, Output = T>,
{
    if n == 0 {
        -table[1]
    } else {
        (table[n - 1] - table[n + 1]) * 0.5
    }
}

fn y0_series(x: f64, j0: f64) -> f64 {
    let q = x * x / 4.0;
    let mut term = 1.0; // q^k / (k!)^2
    let mut harmonic = 0.0;
    let mut sum = 0.0;
    for k in 1..200 {
        let kf = k as f64;
        term *= q / (kf * kf);
        harmonic += 1.0 / kf;
        let t = if k % 2 == 1 { term } else { -term } * harmonic;
        sum += t;
        if t.abs() < 1e-17 * sum.abs().max(1e-300) {
            break;
        }
    }
    FRAC_2_PI * (((x / 2.0).ln() + EULER_GAMMA) * j0 + sum)
}

fn y1_series(x: f64, j1: f64) -> f64 {
    let half = x / 2.0;
    let q = half * half;
    let mut term = half; // (x/2)^(2k+1) / (k! (k+1)!)
    let mut harmonic = 0.0; // H_k
    let mut sum = 0.0;
    for k in 0..200 {
        if k > 0 {
            let kf = k as f64;
            term *= q / (kf * (kf + 1.0));
            harmonic += 1.0 / kf;
        }
        // psi(k+1) + psi(k+2) = -2 gamma + 2 H_k + 1/(k+1)
        let psi_sum = -2.0 * EULER_GAMMA + 2.0 * harmonic + 1.0 / (k as f64 + 1.0);
        let t = if k % 2 == 0 { term } else { -term } * psi_sum;
        sum += t;
        if k > 2 && t.abs() < 1e-17 * sum.abs().max(1e-300) {
            break;
        }
    }
    -FRAC_2_PI / x + FRAC_2_PI * half.ln() * j1 - sum / PI
}

/// Hankel's large-argument expansion; returns `(J_n, Y_n)`.
fn hankel_asymptotic(n: u32, x: f64) -> (f64, f64) {
    let mu = 4.0 * (n as f64).powi(2);
    let mut p = 0.0;
    let mut q = 0.0;
    let mut a = 1.0;
    let mut last = f64::INFINITY;
    for k in 0..60u32 {
        if k > 0 {
            let odd = (2 * k - 1) as f64;
            a *= (mu - odd * odd) / (k as f64 * 8.0 * x);
        }
        if a.abs() > last || a == 0.0 {
            break;
        }
        last = a.abs();
        let sign = if (k / 2) % 2 == 0 { 1.0 } else { -1.0 };
        if k % 2 == 0 {
            p += sign * a;
        } else {
            q += sign * a;
        }
        if a.abs() < 1e-17 {
            break;
        }
    }
    let chi = x - (n as f64 / 2.0 + 0.25) * PI;
    let amp = (FRAC_2_PI / x).sqrt();
    (
        amp * (p * chi.cos() - q * chi.sin()),
        amp * (p * chi.sin() + q * chi.cos()),
    )
}

//! Classical fourth-order Runge-Kutta for small fixed-size systems.
//!
//! Inputs between two samples are handled by the caller through the `s`
//! argument of the right-hand side, the normalized position inside the step
//! (`0`, `0.5` or `1`). Linear interpolation of sampled inputs at `s` gives a
//! first-order hold.

/// One RK4 step of `dx/dt = f(s, x)` over `dt`.
pub fn rk4<const N: usize>(
    x: [f64; N],
    dt: f64,
    f: impl Fn(f64, &[f64; N]) -> [f64; N],
) -> [f64; N] {
    let add = |a: &[f64; N], b: &[f64; N], h: f64| -> [f64; N] {
        std::array::from_fn(|i| a[i] + h * b[i])
    };
    let k1 = f(0.0, &x);
    let k2 = f(0.5, &add(&x, &k1, 0.5 * dt));
    let k3 = f(0.5, &add(&x, &k2, 0.5 * dt));
    let k4 = f(1.0, &add(&x, &k3, dt));
    std::array::from_fn(|i| x[i] + dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]))
}

/// Linear interpolation between `a` (at `s = 0`) and `b` (at `s = 1`).
#[inline]
pub fn lerp(a: f64, b: f64, s: f64) -> f64 {
    a + (b - a) * s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exponential_decay_is_fourth_order() {
        let err = |n: usize| {
            let dt = 1.0 / n as f64;
            let mut x = [1.0];
            for _ in 0..n {
                x = rk4(x, dt, |_, x| [-2.0 * x[0]]);
            }
            (x[0] - (-2.0f64).exp()).abs()
        };
        let ratio = err(20) / err(40);
        assert!((ratio - 16.0).abs() < 1.0, "{ratio}");
    }

    #[test]
    fn linear_input_integrates_exactly() {
        // dx/dt = u(t) with u linear over the step: exact under lerp
        let x = rk4([0.0], 0.5, |s, _| [lerp(1.0, 3.0, s)]);
        assert!((x[0] - 1.0).abs() < 1e-15);
    }
}

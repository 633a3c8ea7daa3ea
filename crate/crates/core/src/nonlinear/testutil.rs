//! Reference systems shared by the estimator tests.

const SIGMA: f64 = 10.0;
const RHO: f64 = 28.0;
const BETA: f64 = 8.0 / 3.0;

fn field(s: [f64; 3]) -> [f64; 3] {
    [SIGMA * (s[1] - s[0]), s[0] * (RHO - s[2]) - s[1], s[0] * s[1] - BETA * s[2]]
}

fn jacobian_apply(s: [f64; 3], v: [f64; 3]) -> [f64; 3] {
    [SIGMA * (v[1] - v[0]), (RHO - s[2]) * v[0] - v[1] - s[0] * v[2], s[1] * v[0] + s[0] * v[1] - BETA * v[2]]
}

fn axpy(a: [f64; 3], h: f64, b: [f64; 3]) -> [f64; 3] {
    [a[0] + h * b[0], a[1] + h * b[1], a[2] + h * b[2]]
}

/// One RK4 step of the state together with a tangent vector.
fn step(s: [f64; 3], v: [f64; 3], dt: f64) -> ([f64; 3], [f64; 3]) {
    let k1 = field(s);
    let l1 = jacobian_apply(s, v);
    let s2 = axpy(s, dt / 2.0, k1);
    let v2 = axpy(v, dt / 2.0, l1);
    let k2 = field(s2);
    let l2 = jacobian_apply(s2, v2);
    let s3 = axpy(s, dt / 2.0, k2);
    let v3 = axpy(v, dt / 2.0, l2);
    let k3 = field(s3);
    let l3 = jacobian_apply(s3, v3);
    let s4 = axpy(s, dt, k3);
    let v4 = axpy(v, dt, l3);
    let k4 = field(s4);
    let l4 = jacobian_apply(s4, v4);
    let mut ns = s;
    let mut nv = v;
    for i in 0..3 {
        ns[i] += dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        nv[i] += dt / 6.0 * (l1[i] + 2.0 * l2[i] + 2.0 * l3[i] + l4[i]);
    }
    (ns, nv)
}

const TRANSIENT: usize = 5000;

/// Lorenz trajectory after a transient, `n` samples at step `dt`.
pub fn lorenz(n: usize, dt: f64) -> Vec<Vec<f64>> {
    let mut s = [1.0, 1.0, 1.0];
    let zero = [0.0; 3];
    for _ in 0..TRANSIENT {
        s = step(s, zero, dt).0;
    }
    let mut out = Vec::with_capacity(n);
    for _ in 0..n {
        out.push(s.to_vec());
        s = step(s, zero, dt).0;
    }
    out
}

/// Largest exponent from a renormalised tangent vector along the same
/// trajectory as [`lorenz`].
pub fn lorenz_tangent_lyapunov(n: usize, dt: f64) -> f64 {
    let mut s = [1.0, 1.0, 1.0];
    for _ in 0..TRANSIENT {
        s = step(s, [0.0; 3], dt).0;
    }
    let mut v = [1.0, 0.0, 0.0];
    let mut acc = 0.0;
    for _ in 0..n {
        let (ns, nv) = step(s, v, dt);
        let norm = (nv[0] * nv[0] + nv[1] * nv[1] + nv[2] * nv[2]).sqrt();
        acc += norm.ln();
        v = [nv[0] / norm, nv[1] / norm, nv[2] / norm];
        s = ns;
    }
    acc / (n as f64 * dt)
}

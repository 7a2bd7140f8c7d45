//! Nelder-Mead simplex minimisation with restarts, and low-discrepancy seeds.

#[derive(Debug, Clone, Copy)]
pub struct NmOptions {
    /// Convergence when the simplex spread in f is below this (absolute).
    pub ftol: f64,
    /// ... and the simplex diameter is below this.
    pub xtol: f64,
    pub max_evals: usize,
    /// Extra restarts from the best vertex after convergence.
    pub restarts: usize,
}

impl Default for NmOptions {
    fn default() -> Self {
        NmOptions { ftol: 1e-12, xtol: 1e-9, max_evals: 20_000, restarts: 2 }
    }
}

#[derive(Debug, Clone)]
pub struct NmResult {
    pub x: Vec<f64>,
    pub f: f64,
    pub evals: usize,
}

fn eval(f: &impl Fn(&[f64]) -> f64, x: &[f64]) -> f64 {
    let v = f(x);
    if v.is_nan() {
        f64::INFINITY
    } else {
        v
    }
}

pub fn nelder_mead(f: impl Fn(&[f64]) -> f64, x0: &[f64], step: &[f64], opts: &NmOptions) -> NmResult {
    let mut best = run(&f, x0, step, opts);
    for _ in 0..opts.restarts {
        let again = run(&f, &best.x, step, opts);
        let improved = best.f - again.f;
        let evals = best.evals + again.evals;
        if again.f < best.f {
            best = again;
        }
        best.evals = evals;
        if improved < opts.ftol {
            break;
        }
    }
    best
}

fn run(f: &impl Fn(&[f64]) -> f64, x0: &[f64], step: &[f64], opts: &NmOptions) -> NmResult {
    let n = x0.len();
    let mut simplex: Vec<Vec<f64>> = vec![x0.to_vec()];
    for i in 0..n {
        let mut x = x0.to_vec();
        x[i] += if step[i] != 0.0 { step[i] } else { 1e-3 };
        simplex.push(x);
    }
    let mut fv: Vec<f64> = simplex.iter().map(|x| eval(f, x)).collect();
    let mut evals = n + 1;
    while evals < opts.max_evals {
        let mut order: Vec<usize> = (0..=n).collect();
        order.sort_by(|&a, &b| fv[a].total_cmp(&fv[b]));
        simplex = order.iter().map(|&i| simplex[i].clone()).collect();
        fv = order.iter().map(|&i| fv[i]).collect();

        let spread = fv[n] - fv[0];
        let diam = simplex[1..]
            .iter()
            .map(|x| x.iter().zip(&simplex[0]).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max))
            .fold(0.0, f64::max);
        if spread.is_finite() && spread <= opts.ftol && diam <= opts.xtol {
            break;
        }
        if diam < 1e-15 {
            break;
        }

        let centroid: Vec<f64> = (0..n).map(|d| simplex[..n].iter().map(|x| x[d]).sum::<f64>() / n as f64).collect();
        let along = |t: f64| -> Vec<f64> { (0..n).map(|d| centroid[d] + t * (simplex[n][d] - centroid[d])).collect() };

        let xr = along(-1.0);
        let fr = eval(f, &xr);
        evals += 1;
        if fr < fv[0] {
            let xe = along(-2.0);
            let fe = eval(f, &xe);
            evals += 1;
            if fe < fr {
                simplex[n] = xe;
                fv[n] = fe;
            } else {
                simplex[n] = xr;
                fv[n] = fr;
            }
        } else if fr < fv[n - 1] {
            simplex[n] = xr;
            fv[n] = fr;
        } else {
            let (xc, fc) = if fr < fv[n] {
                let xc = along(-0.5);
                let fc = eval(f, &xc);
                (xc, fc)
            } else {
                let xc = along(0.5);
                let fc = eval(f, &xc);
                (xc, fc)
            };
            evals += 1;
            if fc < fv[n].min(fr) {
                simplex[n] = xc;
                fv[n] = fc;
            } else {
                for i in 1..=n {
                    simplex[i] = (0..n).map(|d| simplex[0][d] + 0.5 * (simplex[i][d] - simplex[0][d])).collect();
                    fv[i] = eval(f, &simplex[i]);
                }
                evals += n;
            }
        }
    }
    let imin = (0..=n).min_by(|&a, &b| fv[a].total_cmp(&fv[b])).expect("non-empty");
    NmResult { x: simplex[imin].clone(), f: fv[imin], evals }
}

fn radical_inverse(mut i: u64, base: u64) -> f64 {
    let inv = 1.0 / base as f64;
    let mut r = 0.0;
    let mut f = inv;
    while i > 0 {
        r += (i % base) as f64 * f;
        i /= base;
        f *= inv;
    }
    r
}

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// `count` points of a Cranley-Patterson rotated Halton sequence in the box
/// `lo..hi`; the rotation is derived from `seed`.
pub fn halton_points(lo: &[f64], hi: &[f64], count: usize, seed: u64) -> Vec<Vec<f64>> {
    const PRIMES: [u64; 8] = [2, 3, 5, 7, 11, 13, 17, 19];
    let d = lo.len();
    assert!(d <= PRIMES.len(), "too many dimensions for the seed sequence");
    let shift: Vec<f64> = (0..d)
        .map(|k| if seed == 0 { 0.0 } else { (splitmix(seed ^ (k as u64 + 1) * 0x1000_0001) >> 11) as f64 / (1u64 << 53) as f64 })
        .collect();
    (1..=count as u64)
        .map(|i| {
            (0..d)
                .map(|k| {
                    let u = (radical_inverse(i, PRIMES[k]) + shift[k]).fract();
                    lo[k] + (hi[k] - lo[k]) * u
                })
                .collect()
        })
        .collect()
}

use super::fit::standard_chop;
use super::series::{clenshaw, ChebSeries, Interval};
use crate::error::{Error, Result};

const DEFAULT_CAP: usize = 100;
// Off-centre split point (in [-1, 1]) so roots at the midpoint of
// symmetric problems do not land on a subdivision boundary.
const SPLIT: f64 = -0.004849834917525;

/// Real roots of `series` inside its interval, sorted ascending.
pub fn roots(series: &ChebSeries) -> Result<Vec<f64>> {
    roots_with_cap(series, DEFAULT_CAP)
}

/// Like [`roots`] but with an explicit degree cap above which the interval is
/// subdivided before forming the colleague matrix.
pub fn roots_with_cap(series: &ChebSeries, cap: usize) -> Result<Vec<f64>> {
    if series.coeff_scale() == 0.0 {
        return Err(Error::ZeroFunction);
    }
    let iv = series.interval();
    let mut out = Vec::new();
    collect(series, cap.max(4), 0, &mut out);
    out.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let tol = 1e-12 * iv.width();
    let mut merged: Vec<f64> = Vec::with_capacity(out.len());
    for r in out {
        match merged.last() {
            Some(&last) if (r - last).abs() <= tol => {}
            _ => merged.push(r.clamp(iv.lo(), iv.hi())),
        }
    }
    Ok(merged)
}

fn collect(series: &ChebSeries, cap: usize, depth: usize, out: &mut Vec<f64>) {
    let scale = series.coeff_scale();
    if scale == 0.0 {
        return;
    }
    let s = chop(series);
    let iv = s.interval();
    if s.degree() > cap && depth < 24 {
        let mid = iv.from_unit(SPLIT);
        for sub in [Interval::new(iv.lo(), mid), Interval::new(mid, iv.hi())].into_iter().flatten() {
            collect(&s.restrict(sub), cap, depth + 1, out);
        }
        return;
    }
    for t in unit_roots(s.coeffs()) {
        out.push(iv.from_unit(t));
    }
}

/// Drops the trailing noise that restriction leaves behind.
fn chop(s: &ChebSeries) -> ChebSeries {
    match standard_chop(s.coeffs(), 1e-14) {
        Some(keep) if keep < s.coeffs().len() => {
            ChebSeries::new(s.coeffs()[..keep].to_vec(), s.interval())
        }
        _ => s.simplify(1e-15),
    }
}

/// Roots in [-1, 1] of `Σ c_j T_j` via colleague-matrix eigenvalues.
fn unit_roots(c: &[f64]) -> Vec<f64> {
    let n = c.len() - 1;
    let candidates: Vec<f64> = match n {
        0 => return vec![],
        1 => vec![-c[0] / c[1]],
        _ => {
            // transposed colleague matrix: upper Hessenberg, 1-based storage
            let mut a = vec![vec![0.0; n + 1]; n + 1];
            a[2][1] = 1.0;
            for i in 2..n {
                a[i - 1][i] = 0.5;
                a[i + 1][i] = 0.5;
            }
            a[n - 1][n] += 0.5;
            for j in 0..n {
                a[j + 1][n] -= c[j] / (2.0 * c[n]);
            }
            balance(&mut a, n);
            match hqr(&mut a, n) {
                Some(ev) => ev
                    .into_iter()
                    .filter(|&(re, im)| im.abs() < 1e-7 && re.abs() <= 1.0 + 1e-8)
                    .map(|(re, _)| re)
                    .collect(),
                None => return vec![],
            }
        }
    };
    let dc = derivative_coeffs(c);
    candidates
        .into_iter()
        .filter(|t| t.abs() <= 1.0 + 1e-8)
        .map(|t| polish(c, &dc, t.clamp(-1.0, 1.0)))
        .collect()
}

/// Diagonal similarity scaling (radix 2) to equalise row and column norms.
fn balance(a: &mut [Vec<f64>], n: usize) {
    const RADIX: f64 = 2.0;
    let sqrdx = RADIX * RADIX;
    let mut done = false;
    while !done {
        done = true;
        for i in 1..=n {
            let (mut r, mut c) = (0.0, 0.0);
            for j in 1..=n {
                if j != i {
                    c += a[j][i].abs();
                    r += a[i][j].abs();
                }
            }
            if c == 0.0 || r == 0.0 {
                continue;
            }
            let mut g = r / RADIX;
            let mut f = 1.0;
            let s = c + r;
            while c < g {
                f *= RADIX;
                c *= sqrdx;
            }
            g = r * RADIX;
            while c > g {
                f /= RADIX;
                c /= sqrdx;
            }
            if (c + r) / f < 0.95 * s {
                done = false;
                let g = 1.0 / f;
                for j in 1..=n {
                    a[i][j] *= g;
                }
                for row in a.iter_mut().skip(1) {
                    row[i] *= f;
                }
            }
        }
    }
}

/// Eigenvalues of an upper Hessenberg matrix (1-based, destroyed) by the
/// Francis double-shift QR iteration with exceptional shifts.
fn hqr(a: &mut [Vec<f64>], n: usize) -> Option<Vec<(f64, f64)>> {
    let mut wr = vec![0.0; n + 1];
    let mut wi = vec![0.0; n + 1];
    let mut anorm = 0.0;
    for i in 1..=n {
        for j in (i.max(2) - 1)..=n {
            anorm += a[i][j].abs();
        }
    }
    let mut nn = n;
    let mut t = 0.0;
    while nn >= 1 {
        let mut its = 0;
        loop {
            let mut l = nn;
            while l >= 2 {
                let mut s = a[l - 1][l - 1].abs() + a[l][l].abs();
                if s == 0.0 {
                    s = anorm;
                }
                if a[l][l - 1].abs() + s == s {
                    a[l][l - 1] = 0.0;
                    break;
                }
                l -= 1;
            }
            let mut x = a[nn][nn];
            if l == nn {
                wr[nn] = x + t;
                wi[nn] = 0.0;
                nn -= 1;
            } else {
                let mut y = a[nn - 1][nn - 1];
                let mut w = a[nn][nn - 1] * a[nn - 1][nn];
                if l == nn - 1 {
                    let p = 0.5 * (y - x);
                    let q = p * p + w;
                    let mut z = q.abs().sqrt();
                    x += t;
                    if q >= 0.0 {
                        z = p + z.copysign(p);
                        wr[nn - 1] = x + z;
                        wr[nn] = x + z;
                        if z != 0.0 {
                            wr[nn] = x - w / z;
                        }
                        wi[nn - 1] = 0.0;
                        wi[nn] = 0.0;
                    } else {
                        wr[nn - 1] = x + p;
                        wr[nn] = x + p;
                        wi[nn - 1] = -z;
                        wi[nn] = z;
                    }
                    nn = nn.saturating_sub(2);
                } else {
                    if its == 60 {
                        return None;
                    }
                    if its % 10 == 0 && its > 0 {
                        // exceptional shift
                        t += x;
                        for i in 1..=nn {
                            a[i][i] -= x;
                        }
                        let s = a[nn][nn - 1].abs() + a[nn - 1][nn - 2].abs();
                        x = 0.75 * s;
                        y = x;
                        w = -0.4375 * s * s;
                    }
                    its += 1;
                    let (mut p, mut q, mut r);
                    let mut m = nn - 2;
                    loop {
                        let z = a[m][m];
                        r = x - z;
                        let s = y - z;
                        p = (r * s - w) / a[m + 1][m] + a[m][m + 1];
                        q = a[m + 1][m + 1] - z - r - s;
                        r = a[m + 2][m + 1];
                        let s = p.abs() + q.abs() + r.abs();
                        p /= s;
                        q /= s;
                        r /= s;
                        if m == l {
                            break;
                        }
                        let u = a[m][m - 1].abs() * (q.abs() + r.abs());
                        let v = p.abs() * (a[m - 1][m - 1].abs() + z.abs() + a[m + 1][m + 1].abs());
                        if u + v == v {
                            break;
                        }
                        m -= 1;
                    }
                    for i in m + 2..=nn {
                        a[i][i - 2] = 0.0;
                        if i != m + 2 {
                            a[i][i - 3] = 0.0;
                        }
                    }
                    let mut k = m;
                    while k < nn {
                        if k != m {
                            p = a[k][k - 1];
                            q = a[k + 1][k - 1];
                            r = if k != nn - 1 { a[k + 2][k - 1] } else { 0.0 };
                            x = p.abs() + q.abs() + r.abs();
                            if x != 0.0 {
                                p /= x;
                                q /= x;
                                r /= x;
                            }
                        }
                        let s = (p * p + q * q + r * r).sqrt().copysign(p);
                        if s != 0.0 {
                            if k == m {
                                if l != m {
                                    a[k][k - 1] = -a[k][k - 1];
                                }
                            } else {
                                a[k][k - 1] = -s * x;
                            }
                            p += s;
                            x = p / s;
                            y = q / s;
                            let z = r / s;
                            q /= p;
                            r /= p;
                            for j in k..=nn {
                                let mut pp = a[k][j] + q * a[k + 1][j];
                                if k != nn - 1 {
                                    pp += r * a[k + 2][j];
                                    a[k + 2][j] -= pp * z;
                                }
                                a[k + 1][j] -= pp * y;
                                a[k][j] -= pp * x;
                            }
                            let mmin = nn.min(k + 3);
                            for i in l..=mmin {
                                let mut pp = x * a[i][k] + y * a[i][k + 1];
                                if k != nn - 1 {
                                    pp += z * a[i][k + 2];
                                    a[i][k + 2] -= pp * r;
                                }
                                a[i][k + 1] -= pp * q;
                                a[i][k] -= pp;
                            }
                        }
                        k += 1;
                    }
                }
            }
            if nn < 2 || l + 1 >= nn {
                break;
            }
        }
    }
    Some((1..=n).map(|i| (wr[i], wi[i])).collect())
}

fn polish(c: &[f64], dc: &[f64], mut t: f64) -> f64 {
    let mut ft = clenshaw(c, t).abs();
    for _ in 0..4 {
        let d = clenshaw(dc, t);
        if d == 0.0 || ft == 0.0 {
            break;
        }
        let cand = (t - clenshaw(c, t) / d).clamp(-1.0, 1.0);
        let fc = clenshaw(c, cand).abs();
        if fc < ft {
            t = cand;
            ft = fc;
        } else {
            break;
        }
    }
    t
}

fn derivative_coeffs(c: &[f64]) -> Vec<f64> {
    let n = c.len();
    if n < 2 {
        return vec![0.0];
    }
    let mut d = vec![0.0; n + 1];
    for k in (1..n).rev() {
        d[k - 1] = d[k + 1] + 2.0 * k as f64 * c[k];
    }
    d[0] *= 0.5;
    d.truncate(n - 1);
    d
}

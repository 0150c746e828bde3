//! Locating special directions of the field and deciding completeness.
//!
//! A direction `v` on the unit sphere is special when `F(v) = lambda v`:
//! constant solutions of the flow for `lambda = 0`, radial (self-similar,
//! finite-time-blowup) solutions otherwise. The finder polishes a
//! deterministic multistart population (a Halton low-discrepancy grid plus
//! seeded random starts, both mapped to the sphere through Gaussian
//! coordinates) with damped Gauss-Newton, gates every root by its residual,
//! dedups projectively, and groups what survives into components.
//!
//! Zero sets of the quadratic field can be unions of linear subspaces that
//! intersect, so single-linkage clusters are split further: constants `u`,
//! `v` lie on a common plane of constants exactly when the polarized field
//! `B(u, v)` vanishes, which turns plane membership into a pairwise test
//! and components into greedy cliques. A greedy orthogonalization of each
//! component's members then yields its span dimension and basis.
//!
//! Completeness of the geodesic through a given initial vector is decided
//! exactly for the builtin metrics: each carries a coordinate rule, a
//! function `sigma` with `d sigma / dt = sigma^2` along every solution, so
//! the geodesic escapes in finite time `1 / sigma(v)` on the side where
//! `sigma(v)` is nonzero and is complete when `sigma(v) = 0` (growth in the
//! remaining coordinates is polynomial or exponential, never finite-time).
//! Finite predictions are cross-checked against the integrator's blowup
//! estimate. Metrics without a rule get a numeric-only, uncertified
//! verdict: crossing the blowup norm within the horizon reports an
//! incomplete side, anything else stays undetermined.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use std::cmp::Ordering;

use crate::error::{Error, Result};
use crate::flow::integrate::{integrate_geodesic, IntegrationOptions, Termination};
use crate::flow::sphere::newton_polish_sphere;
use crate::flow::{field_jacobian, geodesic_field, polarized_field};
use crate::linalg::{Matrix, Vector};
use crate::metric::{causal_type, CausalType, MetricAlgebra};

/// Largest `|F(v) - lambda v|` an accepted unit direction may have.
pub const RESIDUAL_GATE: f64 = 1e-9;

/// `|lambda|` at or below this counts as a constant direction.
pub const LAMBDA_TOL: f64 = 1e-7;

/// Projective distance under which two roots are the same direction.
pub const DEDUP_TOL: f64 = 1e-6;

/// Polarized-field norm under which two constants share a plane.
const PLANE_COMPAT_TOL: f64 = 1e-7;

/// Orthogonal component a member needs to extend a component's span.
const SPAN_TOL: f64 = 0.02;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum DirectionKind {
    Constant,
    Radial,
}

/// One projective class of special directions, represented by a unit
/// vector whose largest-magnitude coordinate is positive.
#[derive(Clone, Debug, Serialize)]
pub struct SpecialDirection {
    #[serde(rename = "v")]
    pub direction: Vec<f64>,
    /// Eigenvalue at the unit representative; the opposite representative
    /// has the opposite sign.
    pub lambda: f64,
    pub kind: DirectionKind,
    #[serde(rename = "causal_type")]
    pub causal: CausalType,
    /// `|F(v) - lambda v|` at the representative.
    pub residual: f64,
    pub component: usize,
    pub isolated: bool,
    pub component_dim: usize,
}

/// A connected family of special directions.
#[derive(Clone, Debug, Serialize)]
pub struct Component {
    pub id: usize,
    pub kind: DirectionKind,
    /// Dimension of the linear span of the members.
    pub dim: usize,
    pub representative: Vec<f64>,
    /// Orthonormal span basis extracted from the members.
    pub basis: Vec<Vec<f64>>,
    pub members: Vec<Vec<f64>>,
    /// For constant components: largest polarized-field norm over basis
    /// pairs, zero exactly when the whole span consists of constants.
    pub closure_residual: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct DirectionSurvey {
    pub directions: Vec<SpecialDirection>,
    pub components: Vec<Component>,
    pub starts: usize,
    pub converged: usize,
    pub distinct_roots: usize,
}

#[derive(Clone, Copy, Debug)]
pub struct SolverOptions {
    /// Starts per sphere dimension for each of the two start families; also
    /// sets the cluster linkage radius `10 / grid_density`.
    pub grid_density: usize,
    pub seed: u64,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions {
            grid_density: 64,
            seed: 0,
        }
    }
}

/// Finds every projective class of directions with `F(v) = lambda v` that
/// the multistart population can reach, grouped into components.
pub fn find_special_directions(
    ma: &MetricAlgebra<f64>,
    opts: &SolverOptions,
) -> Result<DirectionSurvey> {
    if opts.grid_density == 0 {
        return Err(Error::InvalidInput(
            "grid density must be positive".to_string(),
        ));
    }
    let dim = ma.dim();
    let starts = make_starts(dim, opts);
    let total = starts.len();

    // Polish in parallel; collect preserves input order, so the result is
    // independent of the thread count.
    let polished: Vec<Option<Vector<f64>>> = starts
        .par_iter()
        .map(|s| newton_polish_sphere(ma, s).map(|(root, _)| root))
        .collect();
    let converged = polished.iter().flatten().count();

    // Canonicalize, gate, dedup.
    let mut roots: Vec<(Vector<f64>, f64, f64)> = Vec::new();
    let mut candidates: Vec<Vector<f64>> = polished
        .into_iter()
        .flatten()
        .map(|root| canonical_sign(&root))
        .collect();
    candidates.sort_by(lex_cmp);
    for u in candidates {
        let f = geodesic_field(ma, &u);
        let lambda = f.dot(&u);
        let residual = (&f - &u.scale(&lambda)).norm();
        if residual > RESIDUAL_GATE {
            continue;
        }
        if roots
            .iter()
            .any(|(kept, _, _)| projective_dist(kept, &u) < DEDUP_TOL)
        {
            continue;
        }
        roots.push((u, lambda, residual));
    }
    let distinct = roots.len();

    // Constants are grouped by the exact criterion: two constant
    // directions span a plane made entirely of constants exactly when the
    // polarized field vanishes on the pair. Maximal families are greedy
    // cliques of that pairwise test, so intersecting continua separate and
    // grouping never depends on sample spacing. Radial roots have no such
    // pairwise test and are grouped by single-linkage at the grid
    // resolution instead.
    let (consts, radials): (Vec<usize>, Vec<usize>) =
        (0..roots.len()).partition(|&i| roots[i].1.abs() <= LAMBDA_TOL);
    let mut groups: Vec<(DirectionKind, Vec<usize>)> = Vec::new();
    let mut unassigned = consts;
    while let Some(first) = unassigned.first().copied() {
        let mut clique = vec![first];
        unassigned.remove(0);
        unassigned.retain(|&i| {
            let fits = clique.iter().all(|&j| {
                polarized_field(ma, &roots[i].0, &roots[j].0).norm() <= PLANE_COMPAT_TOL
            });
            if fits {
                clique.push(i);
            }
            !fits
        });
        groups.push((DirectionKind::Constant, clique));
    }
    let link_radius = 10.0 / opts.grid_density as f64;
    let mut dsu = Dsu::new(roots.len());
    for (a, &i) in radials.iter().enumerate() {
        for &j in radials.iter().skip(a + 1) {
            if projective_dist(&roots[i].0, &roots[j].0) < link_radius {
                dsu.union(i, j);
            }
        }
    }
    let mut clusters: Vec<Vec<usize>> = vec![Vec::new(); roots.len()];
    for &i in &radials {
        clusters[dsu.find(i)].push(i);
    }
    for cluster in clusters {
        if !cluster.is_empty() {
            groups.push((DirectionKind::Radial, cluster));
        }
    }

    // Assemble components. A constant component's span gets a second polish
    // against the full field (see refine_plane), and its members are then
    // projected onto the refined span: a point of an all-constant plane is a
    // constant, so the projection replaces each member's transverse polish
    // error with the plane's accuracy. Radial members already sit at machine
    // accuracy and are kept as found.
    struct Assembled {
        kind: DirectionKind,
        members: Vec<Vector<f64>>,
        basis: Vec<Vector<f64>>,
    }
    let mut assembled: Vec<Assembled> = Vec::new();
    for (kind, member_ids) in groups {
        let mut members: Vec<Vector<f64>> =
            member_ids.iter().map(|&i| roots[i].0.clone()).collect();
        let mut basis = greedy_span(members.iter());
        if kind == DirectionKind::Constant {
            if let Some(refined) = refine_plane(ma, &basis) {
                basis = greedy_span(refined.iter());
                members = members
                    .iter()
                    .map(|m| {
                        let mut p = Vector::zeros(ma.dim());
                        for b in &basis {
                            let c = m.dot(b);
                            p = &p + &b.scale(&c);
                        }
                        if p.norm() < 0.5 {
                            m.clone()
                        } else {
                            canonical_sign(&p.normalized())
                        }
                    })
                    .collect();
                members.sort_by(lex_cmp);
            }
        }
        assembled.push(Assembled {
            kind,
            members,
            basis,
        });
    }
    assembled.sort_by(|a, b| lex_cmp(&a.members[0], &b.members[0]));

    let mut components = Vec::new();
    let mut directions = Vec::new();
    for (id, a) in assembled.into_iter().enumerate() {
        let rep = a.members[0].clone();
        let f = geodesic_field(ma, &rep);
        let lambda = f.dot(&rep);
        let residual = (&f - &rep.scale(&lambda)).norm();
        let closure_residual = if a.kind == DirectionKind::Constant {
            let mut worst = 0.0f64;
            for i in 0..a.basis.len() {
                for j in i..a.basis.len() {
                    worst = worst.max(polarized_field(ma, &a.basis[i], &a.basis[j]).norm());
                }
            }
            worst
        } else {
            residual
        };
        let isolated = a.members.len() == 1;
        directions.push(SpecialDirection {
            direction: rep.0.clone(),
            lambda,
            kind: a.kind,
            causal: causal_type(ma.form(), &rep)?,
            residual,
            component: id,
            isolated,
            component_dim: a.basis.len(),
        });
        components.push(Component {
            id,
            kind: a.kind,
            dim: a.basis.len(),
            representative: rep.0.clone(),
            basis: a.basis.iter().map(|b| b.0.clone()).collect(),
            members: a.members.iter().map(|m| m.0.clone()).collect(),
            closure_residual,
        });
    }

    Ok(DirectionSurvey {
        directions,
        components,
        starts: total,
        converged,
        distinct_roots: distinct,
    })
}

/// Halton grid starts followed by seeded random starts, all unit vectors.
fn make_starts(dim: usize, opts: &SolverOptions) -> Vec<Vector<f64>> {
    const PRIMES: [u64; 13] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41];
    let per_family = opts.grid_density * dim;
    let uniform_dims = dim + (dim % 2);
    let mut starts = Vec::with_capacity(2 * per_family);
    for index in 1..=(per_family as u64) {
        let uniforms: Vec<f64> = (0..uniform_dims)
            .map(|d| halton(index, PRIMES[d]))
            .collect();
        if let Some(u) = sphere_point(dim, &uniforms) {
            starts.push(u);
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    for _ in 0..per_family {
        let uniforms: Vec<f64> = (0..uniform_dims)
            .map(|_| 1.0 - rng.gen::<f64>())
            .collect();
        if let Some(u) = sphere_point(dim, &uniforms) {
            starts.push(u);
        }
    }
    starts
}

/// Van der Corput radical inverse of `index` in the given base.
fn halton(mut index: u64, base: u64) -> f64 {
    let mut result = 0.0;
    let mut f = 1.0 / base as f64;
    while index > 0 {
        result += f * (index % base) as f64;
        index /= base;
        f /= base as f64;
    }
    result
}

/// Box-Muller map from uniforms in (0, 1] to a unit vector.
fn sphere_point(dim: usize, uniforms: &[f64]) -> Option<Vector<f64>> {
    let mut gauss = Vec::with_capacity(uniforms.len());
    for pair in uniforms.chunks(2) {
        let u1 = pair[0].max(1e-300);
        let u2 = pair.get(1).copied().unwrap_or(0.5);
        let r = (-2.0 * u1.ln()).sqrt();
        let angle = std::f64::consts::TAU * u2;
        gauss.push(r * angle.cos());
        gauss.push(r * angle.sin());
    }
    gauss.truncate(dim);
    let v = Vector(gauss);
    let norm = v.norm();
    if norm < 1e-9 {
        return None;
    }
    Some(v.scale(&(1.0 / norm)))
}

/// Flips the sign so the largest-magnitude coordinate is positive.
fn canonical_sign(v: &Vector<f64>) -> Vector<f64> {
    let mut idx = 0;
    for i in 1..v.dim() {
        if v[i].abs() > v[idx].abs() {
            idx = i;
        }
    }
    if v[idx] < 0.0 {
        -v
    } else {
        v.clone()
    }
}

fn projective_dist(a: &Vector<f64>, b: &Vector<f64>) -> f64 {
    a.dist(b).min((a + b).norm())
}

fn lex_cmp(a: &Vector<f64>, b: &Vector<f64>) -> Ordering {
    for i in 0..a.dim().min(b.dim()) {
        match a[i].total_cmp(&b[i]) {
            Ordering::Equal => continue,
            other => return other,
        }
    }
    a.dim().cmp(&b.dim())
}

/// Orthonormal basis of the members' span: members are folded in order and
/// kept when their orthogonal part exceeds [`SPAN_TOL`].
fn greedy_span<'a>(members: impl Iterator<Item = &'a Vector<f64>>) -> Vec<Vector<f64>> {
    let mut basis: Vec<Vector<f64>> = Vec::new();
    for m in members {
        let mut r = m.clone();
        for b in &basis {
            let c = r.dot(b);
            r = &r - &b.scale(&c);
        }
        if r.norm() > SPAN_TOL {
            basis.push(canonical_sign(&r.normalized()));
        }
    }
    basis
}

/// Refines an approximate basis of a plane of constants by Newton
/// least-squares on the stacked system `F(v_i) = 0`, `B(v_i, v_j) = 0`.
///
/// Points on one continuum can be impossible to polish in isolation: at a
/// point near the intersection of two constant planes, directions into the
/// other plane are null for the point's own linearization and admit no
/// first-order correction. The stacked system couples the basis vectors,
/// and a direction that is null at one vector keeps a full-size pivot from
/// its partners, so the plane as a whole is a much better conditioned
/// zero. In-plane motion of a basis vector is gauge freedom and is pinned
/// inside the solve.
///
/// The residual geometry has a deep valley that plain damped Newton cannot
/// descend at a useful rate: tilting the whole plane by a slope `s` and
/// compensating along the coordinates the field pins linearly leaves a
/// residual of order `s^3`. The valley is one-dimensional, its bottom is
/// curved, and a straight step of size `h` along its tangent breaks the
/// compensation by `O(h^2)`, which throttles a line search to steps of
/// order `sqrt(s^3)`. The iteration therefore runs in two phases. Phase
/// one is damped Gauss-Newton with a Levenberg-Marquardt schedule, which
/// removes everything the valley does not protect. Once it stalls, the
/// proposed step points along the valley tangent, because nothing else is
/// left in the right-hand side; phase two sweeps that direction with a
/// derivative-free one-dimensional minimization, re-slaving the
/// compensated coordinates at every trial point by a few pinned solves
/// with the sweep direction frozen. Every quantity involved is a product
/// of small terms, so the residual stays measurable far below the
/// acceptance gate and the sweep can place the tilt near its rounding
/// floor. A basis this routine cannot push under the gate is returned
/// unrefined rather than half-corrected.
fn refine_plane(ma: &MetricAlgebra<f64>, basis: &[Vector<f64>]) -> Option<Vec<Vector<f64>>> {
    const PHASE1_ITER: usize = 60;
    const GATE: f64 = 1e-10;
    const DRIFT_CAP: f64 = 1e-2;
    const DAMP_INIT: f64 = 1e-12;
    const DAMP_STEP: f64 = 1e2;
    const DAMP_CAP: f64 = 1e6;
    let n = ma.dim();
    let k = basis.len();
    if k == 0 || k == n {
        // The full space has no transverse directions to correct.
        return Some(basis.to_vec());
    }
    let pairs: Vec<(usize, usize)> = (0..k)
        .flat_map(|i| ((i + 1)..k).map(move |j| (i, j)))
        .collect();
    let rows = (k + pairs.len()) * n;
    let cols = k * n;
    let residual_of = |vs: &[Vector<f64>]| -> f64 {
        let mut r2 = 0.0;
        for v in vs {
            let f = geodesic_field(ma, v);
            r2 += f.dot(&f);
        }
        for &(i, j) in &pairs {
            let b = polarized_field(ma, &vs[i], &vs[j]);
            r2 += b.dot(&b);
        }
        r2.sqrt()
    };
    // One damped least-squares step at `vs`. In-plane motion of each basis
    // vector is pinned inside the solve and stripped from the result, and
    // `frozen`, when present, pins one more direction per block so the
    // phase-two sweep is not undone by its own re-slaving solves. Pivots
    // near the damp are exactly the directions the damp controls, so the
    // solve runs with a zero pivot threshold.
    let gn_step = |vs: &[Vector<f64>],
                   damp: f64,
                   frozen: Option<&[Vector<f64>]>|
     -> Option<Vec<Vector<f64>>> {
        let mut r = vec![0.0; rows];
        for (i, v) in vs.iter().enumerate() {
            let f = geodesic_field(ma, v);
            r[i * n..(i + 1) * n].clone_from_slice(&f.0);
        }
        for (p, &(i, j)) in pairs.iter().enumerate() {
            let b = polarized_field(ma, &vs[i], &vs[j]);
            r[(k + p) * n..(k + p + 1) * n].clone_from_slice(&b.0);
        }
        let mut jm = Matrix::zeros(rows, cols);
        for (i, v) in vs.iter().enumerate() {
            let df = field_jacobian(ma, v);
            for a in 0..n {
                for b in 0..n {
                    jm[(i * n + a, i * n + b)] = df[(a, b)];
                }
            }
        }
        for (p, &(i, j)) in pairs.iter().enumerate() {
            for col in 0..n {
                let eb = Vector::basis(n, col);
                let di = polarized_field(ma, &eb, &vs[j]);
                let dj = polarized_field(ma, &eb, &vs[i]);
                for a in 0..n {
                    jm[((k + p) * n + a, i * n + col)] = di[a];
                    jm[((k + p) * n + a, j * n + col)] = dj[a];
                }
            }
        }
        let jt = jm.transpose();
        let jtj = &jt * &jm;
        let scale = jtj.max_abs();
        if scale <= 0.0 || !scale.is_finite() {
            return None;
        }
        let frozen_units: Vec<Option<Vector<f64>>> = (0..k)
            .map(|i| {
                let f = frozen?.get(i)?;
                let nrm = f.norm();
                (nrm > 0.0).then(|| f.scale(&(1.0 / nrm)))
            })
            .collect();
        let inv = 1.0 / scale;
        let mut m = Matrix::from_fn(cols, cols, |rr, cc| {
            let mut pin = 0.0;
            if rr / n == cc / n {
                pin = vs.iter().map(|q| q[rr % n] * q[cc % n]).sum::<f64>();
                if let Some(f) = &frozen_units[rr / n] {
                    pin += f[rr % n] * f[cc % n];
                }
            }
            (jtj[(rr, cc)] + scale * pin) * inv
        });
        for d in 0..cols {
            m[(d, d)] += damp;
        }
        let rhs = jt.matvec(&Vector(r)).scale(&inv);
        let delta = m.solve_with_pivot_tol(&rhs, &0.0).ok()?;
        let mut dvs: Vec<Vector<f64>> = Vec::with_capacity(k);
        for i in 0..k {
            let mut d = Vector((0..n).map(|t| delta[i * n + t]).collect::<Vec<_>>());
            for q in vs {
                let c = d.dot(q);
                d = &d - &q.scale(&c);
            }
            if let Some(f) = &frozen_units[i] {
                let c = d.dot(f);
                d = &d - &f.scale(&c);
            }
            if !d.norm().is_finite() {
                return None;
            }
            dvs.push(d);
        }
        Some(dvs)
    };
    let norm_of = |dvs: &[Vector<f64>]| dvs.iter().map(|d| d.dot(d)).sum::<f64>().sqrt();
    let escalate = |d: f64| {
        let next = d * DAMP_STEP;
        (next <= DAMP_CAP).then_some(next)
    };
    let mut vs: Vec<Vector<f64>> = basis.to_vec();
    let mut best: Option<(Vec<Vector<f64>>, f64)> = None;
    let track = |vs: &[Vector<f64>], res: f64, best: &mut Option<(Vec<Vector<f64>>, f64)>| {
        match best {
            Some((bv, bn)) => {
                if res < *bn {
                    bv.clone_from(&vs.to_vec());
                    *bn = res;
                }
            }
            None => *best = Some((vs.to_vec(), res)),
        }
    };
    let mut damp = DAMP_INIT;
    let mut slow = 0usize;
    for _ in 0..PHASE1_ITER {
        let res = residual_of(&vs);
        if !res.is_finite() {
            break;
        }
        track(&vs, res, &mut best);
        if res == 0.0 {
            break;
        }
        let Some(dvs) = gn_step(&vs, damp, None) else {
            match escalate(damp) {
                Some(d) => {
                    damp = d;
                    continue;
                }
                None => break,
            }
        };
        let dn = norm_of(&dvs);
        let mut step = if dn > 1.0 { 1.0 / dn } else { 1.0 };
        let mut improved = false;
        let mut next = res;
        for _ in 0..10 {
            let cand: Vec<Vector<f64>> = vs
                .iter()
                .zip(&dvs)
                .map(|(v, d)| (v - &d.scale(&step)).normalized())
                .collect();
            let cres = residual_of(&cand);
            if cres < res {
                vs = cand;
                next = cres;
                improved = true;
                break;
            }
            step *= 0.5;
        }
        if improved {
            damp = (damp / DAMP_STEP).max(f64::MIN_POSITIVE);
            // A throttled descent means the iteration has entered the
            // valley; hand over to the sweep instead of crawling.
            slow = if next > 0.5 * res { slow + 1 } else { 0 };
            if slow >= 3 {
                break;
            }
        } else {
            match escalate(damp) {
                Some(d) => damp = d,
                None => break,
            }
        }
    }
    // Phase two: sweep the valley. The proposal at the stalled point is
    // dominated by the valley tangent; minimize the re-slaved residual
    // along it by bracketing plus bisection on the step multiplier. Each
    // proposal mixes the tangent with whatever junk directions remain, so
    // one sweep stops where the mix balances; successive rounds alternate
    // targets and shrink the tilt geometrically.
    for round in 0..10 {
        let res = residual_of(&vs);
        if !res.is_finite() || res == 0.0 {
            break;
        }
        track(&vs, res, &mut best);
        // The first round still faces junk in every direction and keeps
        // the damp; once only degenerate directions remain, an undamped
        // solve proposes their full Newton moves (the valley tangent at
        // its whole depth, quadratically trapped coordinates at their
        // halving step), which a damped solve would throttle to nothing.
        let round_damp = if round == 0 { DAMP_INIT } else { 0.0 };
        let Some(dvs) = gn_step(&vs, round_damp, None) else {
            break;
        };
        if norm_of(&dvs) == 0.0 {
            break;
        }
        let reslave = |w: Vec<Vector<f64>>| -> Vec<Vector<f64>> {
            let mut w = w;
            for _ in 0..4 {
                let Some(d) = gn_step(&w, round_damp, Some(&dvs)) else {
                    break;
                };
                let cand: Vec<Vector<f64>> = w
                    .iter()
                    .zip(&d)
                    .map(|(v, dd)| (v - dd).normalized())
                    .collect();
                if residual_of(&cand) < residual_of(&w) {
                    w = cand;
                } else {
                    break;
                }
            }
            w
        };
        let at = |t: f64| -> Vec<Vector<f64>> {
            reslave(
                vs.iter()
                    .zip(&dvs)
                    .map(|(v, d)| (v - &d.scale(&t)).normalized())
                    .collect(),
            )
        };
        // The proposal's magnitude is damp-throttled while the distance to
        // the valley bottom is not, so the useful multiplier can be many
        // orders of magnitude, and the residual along the line can dip
        // more than once when the proposal mixes directions. Scan a
        // doubling ladder out to a unit-scale move, keep the global best
        // sample among candidates that stay near the current plane, then
        // refine within one doubling of it.
        let dn = norm_of(&dvs);
        let eval = |t: f64| {
            let cand = at(t);
            let stray = cand
                .iter()
                .zip(&vs)
                .any(|(c, v)| projective_dist(c, v) > 0.1);
            if stray {
                f64::INFINITY
            } else {
                residual_of(&cand)
            }
        };
        let mut lo = 0.0;
        let mut flo = res;
        for sgn in [1.0, -1.0] {
            let mut t = 1.0;
            while t * dn < 16.0 {
                let f = eval(sgn * t);
                if f < flo {
                    lo = sgn * t;
                    flo = f;
                }
                t *= 2.0;
            }
        }
        if lo != 0.0 {
            let (mut a, mut b) = if lo > 0.0 {
                (lo / 2.0, lo * 2.0)
            } else {
                (lo * 2.0, lo / 2.0)
            };
            for _ in 0..30 {
                let m1 = a + (b - a) / 3.0;
                let m2 = b - (b - a) / 3.0;
                if eval(m1) <= eval(m2) {
                    b = m2;
                } else {
                    a = m1;
                }
            }
            let t = 0.5 * (a + b);
            let f = eval(t);
            if f < flo {
                lo = t;
                flo = f;
            }
        }
        if flo > 0.98 * res {
            break;
        }
        vs = at(lo);
        track(&vs, residual_of(&vs), &mut best);
    }
    let res = residual_of(&vs);
    if res.is_finite() {
        track(&vs, res, &mut best);
    }
    let (bvs, bn) = best?;
    let drifted = bvs
        .iter()
        .zip(basis)
        .any(|(b, orig)| projective_dist(b, orig) > DRIFT_CAP);
    if bn <= GATE && !drifted {
        Some(bvs)
    } else {
        None
    }
}

struct Dsu {
    parent: Vec<usize>,
}

impl Dsu {
    fn new(n: usize) -> Self {
        Dsu {
            parent: (0..n).collect(),
        }
    }

    fn find(&mut self, i: usize) -> usize {
        if self.parent[i] != i {
            let root = self.find(self.parent[i]);
            self.parent[i] = root;
        }
        self.parent[i]
    }

    fn union(&mut self, i: usize, j: usize) {
        let (a, b) = (self.find(i), self.find(j));
        if a != b {
            // Smaller index wins, keeping roots order-stable.
            let (lo, hi) = if a < b { (a, b) } else { (b, a) };
            self.parent[hi] = lo;
        }
    }
}

/// Geodesic completeness of one initial vector.
#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Completeness {
    Complete,
    FutureIncomplete { blowup_time: f64 },
    PastIncomplete { blowup_time: f64 },
    BothIncomplete { future_time: f64, past_time: f64 },
    Undetermined { reason: String },
}

#[derive(Clone, Debug, Serialize)]
pub struct CompletenessReport {
    pub verdict: Completeness,
    /// True when the verdict follows from the exact coordinate rule of a
    /// builtin metric; numeric-only verdicts stay uncertified.
    pub certified: bool,
    /// Value of the coordinate rule at the input, when one applies.
    pub sigma: Option<f64>,
    /// Integrator's blowup estimate when a finite prediction was checked.
    pub confirmation: Option<f64>,
}

#[derive(Clone, Copy, Debug)]
pub struct CompletenessOptions {
    /// Numeric horizon for cross-checks and uncertified searches.
    pub horizon: f64,
    pub tol: f64,
}

impl Default for CompletenessOptions {
    fn default() -> Self {
        CompletenessOptions {
            horizon: 1e3,
            tol: 1e-10,
        }
    }
}

/// Finite predictions must agree with the integrator's estimate to this
/// relative accuracy.
const CONFIRM_REL_TOL: f64 = 0.02;

enum SigmaRule {
    /// `sigma(v) = v[i]` satisfies `sigma' = sigma^2` along every solution.
    Coordinate(usize),
    /// Every geodesic of this metric is complete.
    AlwaysComplete,
}

/// Exact completeness rules, keyed by the builtin metric labels.
fn sigma_rule(label: Option<&str>) -> Option<SigmaRule> {
    match label {
        Some("sl2") | Some("sol") | Some("sol_euc") => Some(SigmaRule::Coordinate(2)),
        Some("euc") => Some(SigmaRule::AlwaysComplete),
        _ => None,
    }
}

/// Decides completeness of the geodesic with initial vector `v`.
pub fn completeness_classify(
    ma: &MetricAlgebra<f64>,
    v: &Vector<f64>,
    opts: &CompletenessOptions,
) -> Result<CompletenessReport> {
    if v.dim() != ma.dim() {
        return Err(Error::InvalidInput(format!(
            "initial vector has dimension {}, algebra has {}",
            v.dim(),
            ma.dim()
        )));
    }
    if v.iter().any(|x| !x.is_finite()) {
        return Err(Error::InvalidInput(
            "initial vector must be finite".to_string(),
        ));
    }
    if !(opts.horizon > 0.0) || !(opts.tol > 0.0) {
        return Err(Error::InvalidInput(
            "horizon and tolerance must be positive".to_string(),
        ));
    }
    if v.is_zero() {
        return Ok(CompletenessReport {
            verdict: Completeness::Complete,
            certified: true,
            sigma: None,
            confirmation: None,
        });
    }

    match sigma_rule(ma.label()) {
        Some(SigmaRule::AlwaysComplete) => Ok(CompletenessReport {
            verdict: Completeness::Complete,
            certified: true,
            sigma: None,
            confirmation: None,
        }),
        Some(SigmaRule::Coordinate(i)) => {
            let sigma = v[i];
            if sigma == 0.0 {
                return Ok(CompletenessReport {
                    verdict: Completeness::Complete,
                    certified: true,
                    sigma: Some(sigma),
                    confirmation: None,
                });
            }
            let predicted = 1.0 / sigma;
            let verdict = if sigma > 0.0 {
                Completeness::FutureIncomplete {
                    blowup_time: predicted,
                }
            } else {
                Completeness::PastIncomplete {
                    blowup_time: predicted,
                }
            };
            if predicted.abs() > opts.horizon {
                return Ok(CompletenessReport {
                    verdict,
                    certified: true,
                    sigma: Some(sigma),
                    confirmation: None,
                });
            }
            // Cross-check the finite prediction against the integrator.
            let run = integrate_geodesic(
                ma,
                v,
                &IntegrationOptions {
                    tol: opts.tol,
                    horizon: 1.25 * predicted,
                },
            )?;
            match run.termination {
                Termination::BlowupDetected { estimated_time }
                    if (estimated_time - predicted).abs() <= CONFIRM_REL_TOL * predicted.abs() =>
                {
                    Ok(CompletenessReport {
                        verdict,
                        certified: true,
                        sigma: Some(sigma),
                        confirmation: Some(estimated_time),
                    })
                }
                other => Ok(CompletenessReport {
                    verdict: Completeness::Undetermined {
                        reason: format!(
                            "coordinate rule predicts escape at {predicted} but the \
                             integrator reported {other:?}"
                        ),
                    },
                    certified: false,
                    sigma: Some(sigma),
                    confirmation: None,
                }),
            }
        }
        None => {
            let fwd = integrate_geodesic(
                ma,
                v,
                &IntegrationOptions {
                    tol: opts.tol,
                    horizon: opts.horizon,
                },
            )?;
            let bwd = integrate_geodesic(
                ma,
                v,
                &IntegrationOptions {
                    tol: opts.tol,
                    horizon: -opts.horizon,
                },
            )?;
            let future = match fwd.termination {
                Termination::BlowupDetected { estimated_time } => Ok(Some(estimated_time)),
                Termination::HorizonReached => Ok(None),
                Termination::StepFailure { time } => Err(time),
            };
            let past = match bwd.termination {
                Termination::BlowupDetected { estimated_time } => Ok(Some(estimated_time)),
                Termination::HorizonReached => Ok(None),
                Termination::StepFailure { time } => Err(time),
            };
            let verdict = match (future, past) {
                (Ok(Some(f)), Ok(Some(p))) => Completeness::BothIncomplete {
                    future_time: f,
                    past_time: p,
                },
                (Ok(Some(f)), Ok(None)) => Completeness::FutureIncomplete { blowup_time: f },
                (Ok(None), Ok(Some(p))) => Completeness::PastIncomplete { blowup_time: p },
                (Ok(None), Ok(None)) => Completeness::Undetermined {
                    reason: format!(
                        "no metric rule applies and no blowup within horizon {}",
                        opts.horizon
                    ),
                },
                (Err(t), _) | (_, Err(t)) => Completeness::Undetermined {
                    reason: format!("step size collapsed at time {t}"),
                },
            };
            Ok(CompletenessReport {
                verdict,
                certified: false,
                sigma: None,
                confirmation: None,
            })
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::{Builtin, LieAlgebra};
    use crate::linalg::Matrix;
    use crate::metric::BilinearForm;
    use crate::scalar::rat;

    fn survey(b: Builtin) -> DirectionSurvey {
        let ma = b.metric_algebra().to_float::<f64>();
        find_special_directions(&ma, &SolverOptions::default()).unwrap()
    }

    fn assert_direction_near(d: &SpecialDirection, expected: &[f64], tol: f64) {
        let got = Vector(d.direction.clone());
        let want = Vector(expected.to_vec()).normalized();
        assert!(
            projective_dist(&got, &want) < tol,
            "direction {:?} not near {:?}",
            d.direction,
            expected
        );
    }

    #[test]
    fn sl2_has_exactly_one_constant_and_one_radial_class() {
        let s = survey(Builtin::Sl2);
        assert_eq!(s.components.len(), 2, "{:#?}", s.directions);
        let consts: Vec<_> = s
            .directions
            .iter()
            .filter(|d| d.kind == DirectionKind::Constant)
            .collect();
        let radials: Vec<_> = s
            .directions
            .iter()
            .filter(|d| d.kind == DirectionKind::Radial)
            .collect();
        assert_eq!(consts.len(), 1);
        assert_eq!(radials.len(), 1);
        assert_direction_near(consts[0], &[1.0, 0.0, 0.0], 1e-9);
        assert!(consts[0].isolated && consts[0].component_dim == 1);
        assert_eq!(consts[0].causal, CausalType::Null);
        assert_direction_near(radials[0], &[0.375, -0.5, 1.0], 1e-9);
        // F(v) = v scaled to unit norm gives lambda = 8 / sqrt(89).
        let lambda = 8.0 / 89.0f64.sqrt();
        assert!((radials[0].lambda - lambda).abs() < 1e-9);
        assert_eq!(radials[0].causal, CausalType::Null);
        assert!(radials[0].isolated && radials[0].component_dim == 1);
    }

    #[test]
    fn sol_has_one_constant_class_and_the_unit_radial() {
        let s = survey(Builtin::Sol);
        assert_eq!(s.components.len(), 2, "{:#?}", s.directions);
        let consts: Vec<_> = s
            .directions
            .iter()
            .filter(|d| d.kind == DirectionKind::Constant)
            .collect();
        let radials: Vec<_> = s
            .directions
            .iter()
            .filter(|d| d.kind == DirectionKind::Radial)
            .collect();
        assert_eq!((consts.len(), radials.len()), (1, 1));
        assert_direction_near(consts[0], &[1.0, 0.0, 0.0], 1e-9);
        assert_direction_near(radials[0], &[0.0, 0.0, 1.0], 1e-9);
        assert!((radials[0].lambda - 1.0).abs() < 1e-9);
        assert_eq!(radials[0].causal, CausalType::Null);
    }

    #[test]
    fn euc_has_two_constant_classes_and_no_radial() {
        let s = survey(Builtin::Euc);
        assert_eq!(s.components.len(), 2, "{:#?}", s.directions);
        assert!(s
            .directions
            .iter()
            .all(|d| d.kind == DirectionKind::Constant && d.isolated));
        assert_direction_near(&s.directions[0], &[0.0, 1.0, 0.0], 1e-9);
        assert_direction_near(&s.directions[1], &[1.0, 0.0, 0.0], 1e-9);
        let causals: Vec<_> = s.directions.iter().map(|d| d.causal).collect();
        assert!(causals.contains(&CausalType::Null));
        assert!(causals.contains(&CausalType::Spacelike));
    }

    #[test]
    fn product_has_two_constant_planes_and_one_radial_class() {
        let s = survey(Builtin::SolEuc);
        let consts: Vec<_> = s
            .components
            .iter()
            .filter(|c| c.kind == DirectionKind::Constant)
            .collect();
        let radials: Vec<_> = s
            .components
            .iter()
            .filter(|c| c.kind == DirectionKind::Radial)
            .collect();
        assert_eq!(consts.len(), 2, "{:#?}", s.components);
        assert_eq!(radials.len(), 1);
        for c in &consts {
            assert_eq!(c.dim, 2, "constant continuum spans a plane");
            assert!(c.members.len() > 10);
            assert!(c.closure_residual < 1e-7);
            // Every member lies in span{e1, f1} or span{e1, f2}.
            for m in &c.members {
                assert!(m[1].abs() < 1e-6 && m[2].abs() < 1e-6 && m[5].abs() < 1e-6);
            }
        }
        // The two planes are distinguished by which euc translation appears.
        let has_f1 = consts
            .iter()
            .any(|c| c.members.iter().any(|m| m[3].abs() > 0.5));
        let has_f2 = consts
            .iter()
            .any(|c| c.members.iter().any(|m| m[4].abs() > 0.5));
        assert!(has_f1 && has_f2);
        let radial = radials[0];
        assert_eq!(radial.dim, 1);
        let rep = Vector(radial.representative.clone());
        assert!(projective_dist(&rep, &Vector::basis(6, 2)) < 1e-9);
    }

    #[test]
    fn round_compact_metric_is_all_constants() {
        // Cross-product algebra with the round form: ad* = -ad, the field
        // vanishes identically, and the survey sees one full-dimensional
        // component of constants.
        let so3: LieAlgebra<f64> = LieAlgebra::from_brackets(
            &["x", "y", "z"],
            &[
                (0, 1, &[(2, rat(1, 1))]),
                (1, 2, &[(0, rat(1, 1))]),
                (2, 0, &[(1, rat(1, 1))]),
            ],
        )
        .unwrap()
        .to_float();
        let ma = MetricAlgebra::new(so3, BilinearForm::new(Matrix::identity(3)).unwrap()).unwrap();
        let s = find_special_directions(&ma, &SolverOptions::default()).unwrap();
        assert_eq!(s.components.len(), 1, "{:#?}", s.components);
        assert_eq!(s.components[0].dim, 3);
        assert_eq!(s.components[0].kind, DirectionKind::Constant);
        assert!(!s.directions[0].isolated);
    }

    #[test]
    fn distinct_inertia_metric_has_three_isolated_axes() {
        let so3: LieAlgebra<f64> = LieAlgebra::from_brackets(
            &["x", "y", "z"],
            &[
                (0, 1, &[(2, rat(1, 1))]),
                (1, 2, &[(0, rat(1, 1))]),
                (2, 0, &[(1, rat(1, 1))]),
            ],
        )
        .unwrap()
        .to_float();
        let inertia = BilinearForm::new(Matrix::from_rows(vec![
            vec![1.0, 0.0, 0.0],
            vec![0.0, 2.0, 0.0],
            vec![0.0, 0.0, 3.0],
        ]))
        .unwrap();
        let ma = MetricAlgebra::new(so3, inertia).unwrap();
        let s = find_special_directions(&ma, &SolverOptions::default()).unwrap();
        assert_eq!(s.components.len(), 3, "{:#?}", s.directions);
        for d in &s.directions {
            assert_eq!(d.kind, DirectionKind::Constant);
            assert!(d.isolated);
        }
        for axis in 0..3 {
            assert!(s
                .directions
                .iter()
                .any(|d| projective_dist(&Vector(d.direction.clone()), &Vector::basis(3, axis))
                    < 1e-9));
        }
    }

    #[test]
    fn survey_is_deterministic_across_reruns_and_thread_counts() {
        let ma = Builtin::SolEuc.metric_algebra().to_float::<f64>();
        let opts = SolverOptions::default();
        let base = find_special_directions(&ma, &opts).unwrap();
        let again = find_special_directions(&ma, &opts).unwrap();
        assert_eq!(
            serde_json::to_string(&base.directions).unwrap(),
            serde_json::to_string(&again.directions).unwrap()
        );
        for threads in [1usize, 4] {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build()
                .unwrap();
            let pooled = pool.install(|| find_special_directions(&ma, &opts).unwrap());
            assert_eq!(
                serde_json::to_string(&base.components).unwrap(),
                serde_json::to_string(&pooled.components).unwrap(),
                "thread count {threads}"
            );
        }
    }

    #[test]
    fn random_metrics_pass_the_residual_gate() {
        // Sphere fields on two-spheres always have zeros, so every survey
        // over the three-dimensional algebras must find something, and
        // everything found must satisfy the gate it was filtered by.
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        let algebras = [Builtin::Sl2, Builtin::Sol, Builtin::Euc];
        let mut found = 0usize;
        let mut tried = 0usize;
        while tried < 60 {
            let b = algebras[tried % algebras.len()];
            let mut q = Matrix::zeros(3, 3);
            for i in 0..3 {
                for j in i..3 {
                    let x: f64 = rng.gen_range(-1.0..1.0);
                    q[(i, j)] = x;
                    q[(j, i)] = x;
                }
            }
            let Ok(form) = BilinearForm::new(q) else {
                continue;
            };
            let Ok(ma) = MetricAlgebra::new(b.algebra().to_float(), form) else {
                continue;
            };
            tried += 1;
            let s = find_special_directions(
                &ma,
                &SolverOptions {
                    grid_density: 8,
                    seed: 1,
                },
            )
            .unwrap();
            for d in &s.directions {
                assert!(d.residual <= RESIDUAL_GATE);
                assert!(d.component_dim >= 1 && d.component_dim <= 3);
            }
            if !s.directions.is_empty() {
                found += 1;
            }
        }
        assert!(found >= 55, "only {found} of 60 surveys found directions");
    }

    fn sl2_float() -> MetricAlgebra<f64> {
        Builtin::Sl2.metric_algebra().to_float()
    }

    #[test]
    fn v0_is_future_incomplete_with_confirmed_time_one() {
        let ma = sl2_float();
        let v0 = Vector(vec![0.375, -0.5, 1.0]);
        let r = completeness_classify(&ma, &v0, &CompletenessOptions::default()).unwrap();
        match r.verdict {
            Completeness::FutureIncomplete { blowup_time } => {
                assert!((blowup_time - 1.0).abs() < 1e-12);
            }
            ref other => panic!("expected future incompleteness, got {other:?}"),
        }
        assert!(r.certified);
        assert_eq!(r.sigma, Some(1.0));
        let est = r.confirmation.expect("finite prediction is cross-checked");
        assert!((est - 1.0).abs() < 2e-2);
    }

    #[test]
    fn negated_v0_is_past_incomplete() {
        let ma = sl2_float();
        let v = Vector(vec![-0.375, 0.5, -1.0]);
        let r = completeness_classify(&ma, &v, &CompletenessOptions::default()).unwrap();
        match r.verdict {
            Completeness::PastIncomplete { blowup_time } => {
                assert!((blowup_time + 1.0).abs() < 1e-12);
            }
            ref other => panic!("expected past incompleteness, got {other:?}"),
        }
        assert!(r.certified);
    }

    #[test]
    fn invariant_plane_vectors_are_complete() {
        let ma = sl2_float();
        let v = Vector(vec![1.0, 0.5, 0.0]);
        let r = completeness_classify(&ma, &v, &CompletenessOptions::default()).unwrap();
        assert_eq!(r.verdict, Completeness::Complete);
        assert!(r.certified);
        assert_eq!(r.sigma, Some(0.0));
    }

    #[test]
    fn euc_metric_is_complete_everywhere() {
        let ma = Builtin::Euc.metric_algebra().to_float::<f64>();
        let v = Vector(vec![0.3, -1.0, 2.0]);
        let r = completeness_classify(&ma, &v, &CompletenessOptions::default()).unwrap();
        assert_eq!(r.verdict, Completeness::Complete);
        assert!(r.certified);
    }

    #[test]
    fn product_inherits_the_scaling_coordinate_rule() {
        let ma = Builtin::SolEuc.metric_algebra().to_float::<f64>();
        let v = Vector(vec![0.0, 0.0, 2.0, 0.0, 1.0, 0.0]);
        let r = completeness_classify(&ma, &v, &CompletenessOptions::default()).unwrap();
        match r.verdict {
            Completeness::FutureIncomplete { blowup_time } => {
                assert!((blowup_time - 0.5).abs() < 1e-12);
            }
            ref other => panic!("expected future incompleteness, got {other:?}"),
        }
        assert!(r.certified);
    }

    #[test]
    fn unlabeled_metric_gets_numeric_uncertified_verdicts() {
        // The same geometry built without the builtin label: the verdict
        // must come from integration alone.
        let b = Builtin::Sl2;
        let ma = MetricAlgebra::new(
            b.algebra().to_float::<f64>(),
            b.standard_form().to_float::<f64>(),
        )
        .unwrap();
        assert!(ma.label().is_none());
        let v0 = Vector(vec![0.375, -0.5, 1.0]);
        let r = completeness_classify(&ma, &v0, &CompletenessOptions::default()).unwrap();
        match r.verdict {
            Completeness::FutureIncomplete { blowup_time } => {
                assert!((blowup_time - 1.0).abs() < 1e-2);
            }
            ref other => panic!("expected numeric future incompleteness, got {other:?}"),
        }
        assert!(!r.certified);
        assert_eq!(r.sigma, None);

        let plane = Vector(vec![1.0, 0.5, 0.0]);
        let r = completeness_classify(&ma, &plane, &CompletenessOptions::default()).unwrap();
        assert!(matches!(r.verdict, Completeness::Undetermined { .. }));
    }

    #[test]
    fn zero_vector_is_complete() {
        let ma = sl2_float();
        let r = completeness_classify(
            &ma,
            &Vector(vec![0.0, 0.0, 0.0]),
            &CompletenessOptions::default(),
        )
        .unwrap();
        assert_eq!(r.verdict, Completeness::Complete);
        assert!(r.certified);
    }
}

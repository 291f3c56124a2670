//! One runner per scenario kind. Every runner draws its random data from a
//! generator seeded by the scenario seed, so reports are reproducible.

use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use sclab::connlab::koszul::{koszul_identity_defect, KoszulSpace};
use sclab::connlab::{
    add_symmetric, curvature_identities, symplectize, ConnRef, Connection, CurvatureIdentities, ExprConnection,
    ExprForm, ExprOneForm, FormRef, PointData, SymplecticForm, RICCI_TYPE_TOL,
};
use sclab::induction::{
    closed_form_curvature, reduce_back, reduce_back_horizontality, ricci_flat_choice, ContactQuadruple,
    InducedConnection, SpecRef, ZeroSpec,
};
use sclab::jets::Expr;
use sclab::linalg;
use sclab::parallel::par_map;
use sclab::reduction::{build_chart, certification, e0, sigma_project, SigmaChart, SpElement};
use sclab::twistor::{integrability_defect, random_compatible_j, random_w_curvature, uniqueness_rank, CurvaturePoint};
use sclab::wkb::{
    self, admissibility, cocycle_defect, expansion_sweep, find_barycentre, first_order_coefficient,
    geometric_associativity, symmetry_jacobian, symmetry_law_residual, Amplitude, Gaussian, Model, PhasePoint,
    WkbKernel,
};

use crate::error::{CliError, Context};
use crate::report::{Check, Report};
use crate::scenario::{
    compile, compile_all, ASpec, AmpSpec, BaseSpec, Body, ConnSpec, ConnectionCheck, FormSpec, Induce, InduceExpect,
    Koszul, ModelSpec, Reduce, Roundtrip, Scenario, SpecChoice, Twistor, Wkb, WkbCheck, SPEC_VERSION,
};

type Res<T> = Result<T, CliError>;

/// Run a scenario; `seed` and `tol` override the scenario's values.
pub fn run(sc: &Scenario, seed: Option<u64>, tol: Option<f64>) -> Res<Report> {
    let mut sc = sc.clone();
    if let Some(s) = seed {
        sc.seed = s;
    }
    if tol.is_some() {
        sc.tol = tol;
    }
    let ctx = Ctx { seed: sc.seed, tol: sc.tol };
    let checks = match &sc.body {
        Body::ConnectionCheck(b) => connection_check(&ctx, b)?,
        Body::Reduce(b) => reduce(&ctx, b)?,
        Body::Induce(b) => induce(&ctx, b)?,
        Body::Roundtrip(b) => roundtrip(&ctx, b)?,
        Body::Twistor(b) => twistor(&ctx, b)?,
        Body::Wkb(b) => run_wkb(&ctx, b)?,
        Body::Koszul(b) => koszul(&ctx, b)?,
    };
    let pass = checks.iter().all(|c| c.pass);
    Ok(Report {
        spec_version: SPEC_VERSION,
        tool_version: env!("CARGO_PKG_VERSION"),
        kind: sc.kind().as_str(),
        seed: sc.seed,
        scenario: sc.to_value(),
        checks,
        pass,
    })
}

struct Ctx {
    seed: u64,
    tol: Option<f64>,
}

impl Ctx {
    fn rng(&self, stream: u64) -> ChaCha8Rng {
        let mut r = ChaCha8Rng::seed_from_u64(self.seed);
        r.set_stream(stream);
        r
    }

    fn below(&self, name: impl Into<String>, residual: f64, default: f64) -> Check {
        Check::below(name, residual, self.tol.unwrap_or(default))
    }
}

fn fold_max(it: impl IntoIterator<Item = f64>) -> f64 {
    // NaN propagates so that a broken evaluation fails its check
    it.into_iter().fold(0.0, |m, v| if v.is_nan() || m.is_nan() { f64::NAN } else { m.max(v) })
}

fn flat(m: &[Vec<f64>]) -> Vec<f64> {
    m.iter().flatten().copied().collect()
}

fn build_form(f: &FormSpec, d: usize) -> Res<FormRef> {
    Ok(match f {
        FormSpec::Standard => Arc::new(ExprForm::standard(d)),
        FormSpec::Constant { matrix } => Arc::new(ExprForm::constant(d, &flat(matrix)).context("form")?),
        FormSpec::Upper { entries } => {
            Arc::new(ExprForm::from_upper(d, compile_all("form.entries", entries, d, d * (d - 1) / 2)?).context("form")?)
        }
        FormSpec::Exact { potential } => Arc::new(ExprForm::exact(&compile_all("form.potential", potential, d, d)?).context("form")?),
    })
}

fn build_conn(path: &str, c: &ConnSpec, d: usize) -> Res<ConnRef> {
    Ok(match c {
        ConnSpec::Flat => Arc::new(ExprConnection::flat(d)),
        ConnSpec::Christoffel { symbols } => {
            Arc::new(ExprConnection::new(d, compile_all(&format!("{path}.symbols"), symbols, d, d * d * d)?).context(path)?)
        }
    })
}

pub(crate) fn build_a(a: &ASpec, size: usize, seed: u64) -> Res<SpElement> {
    match a {
        ASpec::J0 => SpElement::j0(size),
        ASpec::Matrix { entries } => SpElement::new(size, flat(entries)),
        ASpec::Symmetric { entries } => SpElement::from_symmetric(size, &flat(entries)),
        ASpec::Random { scale } => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(7);
            SpElement::random(size, &mut rng, *scale)
        }
    }
    .context("a")
}

/// The chart centre: the given point, `e₀` for `J₀`, or a point of `Σ_A`
/// found by projecting random vectors with `Ω′(v, Av) > 0.2`.
fn build_sigma_chart(ctx: &Ctx, a: &ASpec, size: usize, x0: &Option<Vec<f64>>, radius: f64) -> Res<SigmaChart> {
    let elem = build_a(a, size, ctx.seed)?;
    if let Some(x) = x0 {
        return build_chart(&elem, x, radius).context("chart");
    }
    if matches!(a, ASpec::J0) {
        return build_chart(&elem, &e0(size), radius).context("chart");
    }
    let mut rng = ctx.rng(8);
    let mut last = None;
    for _ in 0..1000 {
        let v: Vec<f64> = (0..size).map(|_| rng.random_range(-1.0..1.0)).collect();
        if elem.hamiltonian(&v) > 0.2 {
            let x = sigma_project(&elem, &v).context("Σ projection")?;
            match build_chart(&elem, &x, radius) {
                Ok(c) => return Ok(c),
                Err(e) => last = Some(e),
            }
        }
    }
    Err(CliError::Module {
        context: "chart".into(),
        source: last.unwrap_or_else(|| sclab::Error::OffCone(0.0)),
    })
}

struct Base {
    conn: ConnRef,
    form: FormRef,
    quad: ContactQuadruple,
    /// Reduction charts are Ricci-type by construction.
    ricci_type: bool,
}

fn build_base(ctx: &Ctx, b: &BaseSpec) -> Res<Base> {
    match b {
        BaseSpec::Chart { potential, connection, perturbation } => {
            let d = potential.len();
            let lambda = compile_all("base.potential", potential, d, d)?;
            let quad = ContactQuadruple::new(Arc::new(ExprOneForm::new(lambda).context("base.potential")?)).context("base")?;
            let form: FormRef = Arc::new(quad.base_form());
            let raw = build_conn("base.connection", connection, d)?;
            let mut conn: ConnRef = Arc::new(symplectize(raw, form.clone()).context("base")?);
            if let Some(p) = perturbation {
                let s = compile_all("base.perturbation", p, d, d * d * d)?;
                conn = Arc::new(add_symmetric(conn, form.clone(), s).context("base.perturbation")?);
            }
            Ok(Base { conn, form, quad, ricci_type: false })
        }
        BaseSpec::Reduction { size, a, x0, radius } => {
            let chart = build_sigma_chart(ctx, a, *size, x0, *radius)?;
            let quad = ContactQuadruple::new(Arc::new(chart.potential())).context("base")?;
            Ok(Base { conn: Arc::new(chart.connection()), form: Arc::new(chart.form()), quad, ricci_type: true })
        }
    }
}

fn sample_box(rng: &mut ChaCha8Rng, count: usize, d: usize, h: f64) -> Vec<Vec<f64>> {
    (0..count).map(|_| (0..d).map(|_| rng.random_range(-h..h)).collect()).collect()
}

fn symplectic_rows(ctx: &Ctx, conn: &dyn Connection, form: &dyn SymplecticForm, pts: &[Vec<f64>]) -> Res<Vec<Check>> {
    let per = par_map(pts, |x| -> sclab::Result<(f64, f64)> {
        let p = PointData::at(conn, form, x, 0)?;
        Ok((linalg::max_abs_jets(&p.torsion()), linalg::max_abs_jets(&p.nabla_omega())))
    });
    let per = per.into_iter().collect::<sclab::Result<Vec<_>>>().context("connection")?;
    Ok(vec![
        ctx.below("torsion", fold_max(per.iter().map(|p| p.0)), 1e-9),
        ctx.below("nabla_omega", fold_max(per.iter().map(|p| p.1)), 1e-9),
    ])
}

fn identities(conn: &dyn Connection, form: &dyn SymplecticForm, pts: &[Vec<f64>]) -> Res<Vec<CurvatureIdentities>> {
    par_map(pts, |x| curvature_identities(conn, form, x)).into_iter().collect::<sclab::Result<Vec<_>>>().context("curvature")
}

fn identity_rows(ctx: &Ctx, ids: &[CurvatureIdentities]) -> Vec<Check> {
    let m = |f: fn(&CurvatureIdentities) -> f64| fold_max(ids.iter().map(f));
    vec![
        ctx.below("bianchi", m(|i| i.bianchi), 1e-8),
        ctx.below("ricci_symmetry", m(|i| i.ricci_symmetry), 1e-8),
        ctx.below("ricci_trace_relation", m(|i| i.ricci_trace_relation), 1e-8),
        ctx.below("decomposition", m(|i| i.decomposition), 1e-8),
        ctx.below("w_trace", m(|i| i.w_trace), 1e-8),
    ]
}

fn connection_check(ctx: &Ctx, c: &ConnectionCheck) -> Res<Vec<Check>> {
    let d = c.dimension;
    let form = build_form(&c.form, d)?;
    let mut conn = build_conn("connection", &c.connection, d)?;
    if c.symplectize {
        conn = Arc::new(symplectize(conn, form.clone()).context("symplectize")?);
    }
    if let Some(p) = &c.perturbation {
        let s = compile_all("perturbation", p, d, d * d * d)?;
        conn = Arc::new(add_symmetric(conn, form.clone(), s).context("perturbation")?);
    }
    let pts = sample_box(&mut ctx.rng(1), c.points, d, c.sample_box);
    let mut rows = symplectic_rows(ctx, conn.as_ref(), form.as_ref(), &pts)?;
    let ids = identities(conn.as_ref(), form.as_ref(), &pts)?;
    rows.extend(identity_rows(ctx, &ids));
    let w = fold_max(ids.iter().map(|i| i.w_norm));
    match c.expect_ricci_type {
        Some(true) => rows.push(ctx.below("ricci_type", w, RICCI_TYPE_TOL)),
        Some(false) => rows.push(Check::above("not_ricci_type", w, RICCI_TYPE_TOL)),
        None => {}
    }
    Ok(rows)
}

fn reduce(ctx: &Ctx, r: &Reduce) -> Res<Vec<Check>> {
    let chart = build_sigma_chart(ctx, &r.a, r.size, &r.x0, r.radius)?;
    let pts = chart.sample_points(r.points, &mut ctx.rng(2));
    let (conn, form) = (chart.connection(), chart.form());
    let mut rows = symplectic_rows(ctx, &conn, &form, &pts)?;
    rows.extend(identity_rows(ctx, &identities(&conn, &form, &pts)?));
    let cert = certification(&chart, &pts, RICCI_TYPE_TOL).context("certification")?;
    rows.extend([
        ctx.below("ricci_type", cert.w_max, RICCI_TYPE_TOL),
        ctx.below("preferred", cert.preferred_max, 1e-7),
        ctx.below("rebuild", cert.rebuild_max, 1e-7),
        ctx.below("rho_formula", cert.rho_dev, 1e-6),
        ctx.below("u_formula", cert.u_dev, 1e-6),
        ctx.below("f_formula", cert.f_dev, 1e-6),
        ctx.below("k_constant", cert.k_spread, 1e-6),
    ]);
    Ok(rows)
}

fn induced(base: &Base, spec: SpecChoice) -> Res<InducedConnection> {
    let spec: SpecRef = match spec {
        SpecChoice::RicciFlat => Arc::new(ricci_flat_choice(base.conn.clone(), base.form.clone()).context("ricci-flat choice")?),
        SpecChoice::Zero => Arc::new(ZeroSpec { dim: base.form.dim() }),
    };
    InducedConnection::new(base.conn.clone(), base.quad.clone(), spec).context("induced connection")
}

fn p_points(rng: &mut ChaCha8Rng, count: usize, d: usize, h: f64) -> Vec<Vec<f64>> {
    (0..count)
        .map(|_| {
            let mut p: Vec<f64> = (0..d).map(|_| rng.random_range(-h..h)).collect();
            p.push(rng.random_range(-1.0..1.0));
            p.push(rng.random_range(-0.5..0.5));
            p
        })
        .collect()
}

fn induce(ctx: &Ctx, i: &Induce) -> Res<Vec<Check>> {
    let base = build_base(ctx, &i.base)?;
    let conn = induced(&base, i.spec)?;
    let mu = base.quad.induced_form();
    let pts = p_points(&mut ctx.rng(3), i.points, base.form.dim(), i.sample_box);
    let mut rows = symplectic_rows(ctx, &conn, &mu, &pts)?;
    let ids = identities(&conn, &mu, &pts)?;
    rows.extend(identity_rows(ctx, &ids));
    let expect = i.expect.unwrap_or(if base.ricci_type { InduceExpect::Flat } else { InduceExpect::RicciFlat });
    let curv = fold_max(ids.iter().map(|c| c.magnitude));
    match expect {
        InduceExpect::RicciFlat => {
            rows.push(ctx.below("induced_ricci", fold_max(ids.iter().map(|c| c.ricci_max)), 1e-7));
            rows.push(Check::above("induced_curvature_nonzero", curv, 1e-2));
        }
        InduceExpect::Flat => rows.push(ctx.below("induced_flat", curv, 1e-6)),
    }
    let blocks = par_map(&pts, |p| closed_form_curvature(&conn, p));
    let blocks = blocks.into_iter().collect::<sclab::Result<Vec<_>>>().context("closed-form curvature")?;
    rows.push(ctx.below("closed_form_blocks", fold_max(blocks.iter().map(|b| b.max_block_deviation())), 1e-6));
    rows.push(ctx.below("zero_blocks", fold_max(blocks.iter().map(|b| b.max_zero_block())), 1e-9));
    Ok(rows)
}

fn roundtrip(ctx: &Ctx, r: &Roundtrip) -> Res<Vec<Check>> {
    let base = build_base(ctx, &r.base)?;
    let d = base.form.dim();
    let conn: ConnRef = Arc::new(induced(&base, r.spec)?);
    let pts = sample_box(&mut ctx.rng(4), r.points, d, r.sample_box);
    let red = reduce_back(conn, Arc::new(base.quad.induced_form()), &pts[..pts.len().min(5)]).context("reduce back")?;
    let per = par_map(&pts, |x| -> sclab::Result<(f64, f64, f64)> {
        let dev = |a: Vec<f64>, b: Vec<f64>| fold_max(a.iter().zip(&b).map(|(p, q)| (p - q).abs()));
        let g = dev(linalg::values(&red.connection().gamma(x, 0)?), linalg::values(&base.conn.gamma(x, 0)?));
        let w = dev(linalg::values(&red.form().omega(x, 0)?), linalg::values(&base.form.omega(x, 0)?));
        Ok((g, w, reduce_back_horizontality(&red, x)?))
    });
    let per = per.into_iter().collect::<sclab::Result<Vec<_>>>().context("roundtrip")?;
    Ok(vec![
        ctx.below("gamma_recovery", fold_max(per.iter().map(|p| p.0)), 1e-7),
        ctx.below("omega_recovery", fold_max(per.iter().map(|p| p.1)), 1e-7),
        ctx.below("horizontality", fold_max(per.iter().map(|p| p.2)), 1e-9),
    ])
}

fn twistor(ctx: &Ctx, t: &Twistor) -> Res<Vec<Check>> {
    let base = build_base(ctx, &t.base)?;
    let d = base.form.dim();
    let pts = sample_box(&mut ctx.rng(5), t.points, d, t.sample_box);
    let curv = par_map(&pts, |x| CurvaturePoint::at(base.conn.as_ref(), base.form.as_ref(), x));
    let curv = curv.into_iter().collect::<sclab::Result<Vec<_>>>().context("curvature")?;
    let worst_over_j = |c: &CurvaturePoint, salt: u64| -> sclab::Result<f64> {
        let mut worst = 0.0f64;
        for k in 0..t.j_samples as u64 {
            let j = random_compatible_j(d, &c.omega, ctx.seed.wrapping_mul(1_000_003).wrapping_add(salt * 100_000 + k))?;
            worst = worst.max(integrability_defect(c, &j)?);
        }
        Ok(worst)
    };
    let defects = par_map(&(0..curv.len()).collect::<Vec<_>>(), |&i| worst_over_j(&curv[i], i as u64));
    let defect = fold_max(defects.into_iter().collect::<sclab::Result<Vec<_>>>().context("twistor defect")?);
    // the criterion is an equivalence, so the expectation follows the measured W
    let w = fold_max(identities(base.conn.as_ref(), base.form.as_ref(), &pts)?.iter().map(|i| i.w_norm));
    let mut rows = vec![Check::info("base_w_norm", w)];
    rows.push(if w < RICCI_TYPE_TOL {
        ctx.below("twistor_defect", defect, 1e-9)
    } else {
        Check::above("twistor_defect_nonzero", defect, 1e-3)
    });
    if let Some(norm) = t.inject_w {
        let c = &curv[0];
        let w = random_w_curvature(d, &c.omega, norm, &mut ctx.rng(6)).context("injected W")?;
        let injected = worst_over_j(&c.add(&w), 999).context("injected W")?;
        rows.push(Check::above("twistor_injected_w", injected, 1e-3));
    }
    if let Some(n) = t.uniqueness_samples {
        let u = uniqueness_rank(d, n, ctx.seed).context("uniqueness rank")?;
        rows.push(Check::new("uniqueness_rank", crate::report::Comparison::Equal, u.rank as f64, u.expected as f64));
    }
    Ok(rows)
}

fn amplitude(a: &AmpSpec) -> Res<Amplitude> {
    Ok(match a {
        AmpSpec::A0 => Amplitude::A0,
        AmpSpec::StronglyClosed => Amplitude::strongly_closed(),
        AmpSpec::JacSqrt => Amplitude::JacSqrt,
        AmpSpec::P { p } => {
            let e: Expr = compile("amplitude.p", p, 1)?;
            Amplitude::Pfamily(Arc::new(move |t: f64| e.eval(&[t])))
        }
    })
}

fn phase_point(rng: &mut ChaCha8Rng) -> PhasePoint {
    PhasePoint::new(rng.random_range(-1.0..1.0), rng.random_range(-2.0..2.0))
}

fn wkb_kernel_rows(ctx: &Ctx, w: &Wkb, amp: &Amplitude) -> Res<Vec<Check>> {
    let mut rng = ctx.rng(10);
    let quads: Vec<[PhasePoint; 4]> = (0..w.samples).map(|_| [0; 4].map(|_| phase_point(&mut rng))).collect();
    let m = Model::Curved;
    let inv = fold_max(quads.iter().map(|&[x, y, ..]| m.symmetry(x, m.symmetry(x, y)).dist(&y)));
    let jac = fold_max(quads.iter().map(|&[x, y, ..]| (symmetry_jacobian(m, x, y) - 1.0).abs()));
    let law = fold_max(quads.iter().map(|&[x, y, z, _]| symmetry_law_residual(m, x, y, z)));
    let adm = admissibility(m, &quads);
    let fixed = quads
        .iter()
        .map(|&[x, y, z, _]| -> sclab::Result<f64> {
            let big = m.triple_fixed_point(x, y, z)?;
            Ok(m.symmetry(x, m.symmetry(y, m.symmetry(z, big))).dist(&big))
        })
        .collect::<sclab::Result<Vec<_>>>()
        .context("triple fixed point")?;
    let n_amp = w.samples.min(100);
    let mut dev = Vec::with_capacity(n_amp);
    let mut ratio = Vec::with_capacity(n_amp);
    let mut l_dep = Vec::with_capacity(n_amp);
    for &[x, y, z, s] in &quads[..n_amp] {
        let root = wkb::amplitude(&Amplitude::JacSqrt, x, y, z).context("√Jac")?;
        let a = wkb::amplitude(amp, x, y, z).context("amplitude")?;
        dev.push((root - a).abs() / a);
        ratio.push(root / a);
        let j = wkb::jac_phi(x, y, z).context("Jac")?;
        let moved = wkb::jac_phi(PhasePoint::new(x.a, s.l), PhasePoint::new(y.a, x.l), PhasePoint::new(z.a, y.l)).context("Jac")?;
        l_dep.push((moved - j).abs() / j.max(1.0));
    }
    Ok(vec![
        ctx.below("symmetry_involution", inv, 1e-10),
        ctx.below("symplectomorphism", jac, 1e-10),
        ctx.below("symmetry_law", law, 1e-10),
        ctx.below("admissibility", adm.admissible, 1e-10),
        ctx.below("antisymmetry", adm.antisymmetry, 1e-10),
        ctx.below("diagonal_invariance", adm.diagonal, 1e-10),
        ctx.below("fixed_point", fold_max(fixed), 1e-10),
        ctx.below("jac_amplitude", fold_max(dev), 1e-6),
        Check::info("jac_amplitude_ratio", ratio.iter().sum::<f64>() / ratio.len() as f64),
        ctx.below("jac_l_independence", fold_max(l_dep), 1e-9),
    ])
}

fn gaussian(g: &crate::scenario::GaussianSpec) -> Res<Gaussian> {
    Gaussian::new(g.a0, g.l0, g.w).context("Gaussian")
}

fn wkb_expansion_rows(w: &Wkb, amp: &Amplitude) -> Res<Vec<Check>> {
    let model = match w.model.unwrap_or(ModelSpec::Curved) {
        ModelSpec::Curved => Model::Curved,
        ModelSpec::Flat => Model::Flat,
    };
    let nodes = (w.nodes[0], w.nodes[1]);
    let mut rows = Vec::new();
    for (i, pair) in w.pairs.iter().enumerate() {
        let (u, v) = (gaussian(&pair.u)?, gaussian(&pair.v)?);
        let x = PhasePoint::new(pair.x[0], pair.x[1]);
        let kernel = WkbKernel::new(w.thetas[0], amp.clone(), model).context("kernel")?;
        let rep = expansion_sweep(&u, &v, x, &kernel, &w.thetas, nodes, w.kappa).context("expansion sweep")?;
        rows.push(Check::above(format!("expansion_slope[pair={i}]"), rep.slope, 1.8));
        rows.push(Check::above(format!("refinement_margin[pair={i}]"), rep.refinement_margin(), 10.0));
        let theta_min = w.thetas.iter().copied().fold(f64::INFINITY, f64::min);
        let k = WkbKernel::new(theta_min, amp.clone(), model).context("kernel")?;
        match first_order_coefficient(&u, &v, x, &k, nodes) {
            Ok(c) => rows.push(Check::info(format!("first_order_coefficient[pair={i}]"), c.re)),
            Err(sclab::Error::InvalidInput(_)) => {}
            Err(e) => return Err(CliError::Module { context: "first-order coefficient".into(), source: e }),
        }
    }
    Ok(rows)
}

fn wkb_cocycle_rows(ctx: &Ctx, w: &Wkb) -> Res<Vec<Check>> {
    let mut rng = ctx.rng(11);
    let quads: Vec<[PhasePoint; 4]> = (0..w.samples).map(|_| [0; 4].map(|_| phase_point(&mut rng))).collect();
    let ts: Vec<PhasePoint> = (0..100).map(|_| phase_point(&mut rng)).collect();
    let quad = quads[0];
    let probes = [ts[0], ts[1]];
    let flat_assoc = match find_barycentre(Model::Flat, quad, probes) {
        Ok(b) => geometric_associativity(Model::Flat, b.g, quad, &ts),
        Err(sclab::Error::NoBarycentre(_)) => f64::INFINITY,
        Err(e) => return Err(CliError::Module { context: "barycentre".into(), source: e }),
    };
    // best candidate for the curved phase: a grid plus the probe root, if any
    let mut curved_best = f64::INFINITY;
    for i in 0..41 {
        for j in 0..41 {
            let g = PhasePoint::new(-2.0 + 0.1 * i as f64, -4.0 + 0.2 * j as f64);
            curved_best = curved_best.min(geometric_associativity(Model::Curved, g, quad, &ts));
        }
    }
    if let Ok(b) = find_barycentre(Model::Curved, quad, probes) {
        curved_best = curved_best.min(geometric_associativity(Model::Curved, b.g, quad, &ts));
    }
    Ok(vec![
        ctx.below("cocycle_flat", cocycle_defect(Model::Flat, &quads), 1e-12),
        Check::above("cocycle_curved", cocycle_defect(Model::Curved, &quads), 1e-3),
        ctx.below("geometric_associativity", flat_assoc, 1e-8),
        Check::above("curved_no_barycentre", curved_best, 1e-3),
    ])
}

fn run_wkb(ctx: &Ctx, w: &Wkb) -> Res<Vec<Check>> {
    let amp = amplitude(&w.amplitude)?;
    let mut rows = Vec::new();
    if w.checks.contains(&WkbCheck::Kernel) {
        rows.extend(wkb_kernel_rows(ctx, w, &amp)?);
    }
    if w.checks.contains(&WkbCheck::Expansion) {
        rows.extend(wkb_expansion_rows(w, &amp)?);
    }
    if w.checks.contains(&WkbCheck::Cocycle) {
        rows.extend(wkb_cocycle_rows(ctx, w)?);
    }
    Ok(rows)
}

fn koszul(ctx: &Ctx, k: &Koszul) -> Res<Vec<Check>> {
    let mut rng = ctx.rng(12);
    let mut rows = Vec::new();
    for &dim in &k.dims {
        for q in 0..=k.max_degree {
            for p in 0..=(k.max_degree - q) {
                let space = KoszulSpace::new(dim, q, p).context("Koszul space")?;
                if space.is_empty() {
                    continue;
                }
                let t = space.random(&mut rng);
                let defect = koszul_identity_defect(&t).context("Koszul identities")?;
                rows.push(ctx.below(format!("koszul[dim={dim},q={q},p={p}]"), defect, 1e-12));
            }
        }
    }
    Ok(rows)
}

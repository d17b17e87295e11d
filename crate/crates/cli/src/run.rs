//! Builds library objects from a validated config and runs one task.

use mfmdp::meanfield::{
    average_reward, flow, flow_rewards, tauber_check, value_iterate_limit, Schedule, SimplexGrid,
};
use mfmdp::metropolis::{
    build_balance_kernel, default_kappa, feasibility_bounds, invert_kernel, verify_stationarity,
};
use mfmdp::nagent::{
    check_equivalence, decode_configuration, replicate, value_iterate_empirical, value_iterate_product,
    Controller, InitialCondition,
};
use mfmdp::staticopt::{
    evaluate_spread, market_place_solution, maximize_spread, maximize_spread_exact, optimize_common_noise,
    CommonNoiseSpec, RectangleMarket, MAX_EXACT_DIM,
};
use mfmdp::transport::{
    contraction_check, wasserstein_finite, AtomMeasure, FiniteMetric, LinearMFModel, PolicyFamily,
};
use mfmdp::{
    AdmissibleActions, AgentConfiguration, ConditionalPolicy, DiscountSpec, Error, Graph, Kernel, Matrix,
    MeanFieldModel, NoiseOutcome, Rational, RewardModel, Scalar, SimplexVector, TransitionModel,
};

use crate::config::{
    ControllerKind, LinearPolicySpec, LoadedConfig, Method, Num, PolicySpec, RewardSpec, TaskKind,
};
use crate::output::{summary, Artifacts, Csv};

pub const DEFAULT_TOLERANCE: f64 = 1e-8;
pub const DEFAULT_MAX_ITERATIONS: usize = 1_000_000;

type Res<T> = mfmdp::Result<T>;

fn exact(v: &Num, what: &str) -> Res<Rational> {
    v.exact().ok_or_else(|| Error::Input(format!("{what}: not a number")))
}

/// Mass vector as `node,mass,exact` rows.
fn mass_table(mu: &[Rational]) -> String {
    let mut csv = Csv::new(&["node", "mass", "exact"]);
    for (x, m) in mu.iter().enumerate() {
        csv.row(&[&x, &m.to_f64(), m]);
    }
    csv.into_string()
}

fn matrix_table(m: &Matrix<Rational>, row: &str, col: &str) -> String {
    let mut csv = Csv::new(&[row, col, "prob", "exact"]);
    for i in 0..m.rows() {
        for j in 0..m.cols() {
            let v = &m[(i, j)];
            if *v != Rational::zero() {
                csv.row(&[&i, &j, &v.to_f64(), v]);
            }
        }
    }
    csv.into_string()
}

struct Context<'a> {
    lc: &'a LoadedConfig,
    seed: Option<u64>,
}

impl Context<'_> {
    fn distance(&self) -> Res<Matrix<Rational>> {
        self.lc
            .distance_exact()
            .map_err(|e| Error::Input(e.to_string()))?
            .ok_or_else(|| Error::Input("model.distance is missing".into()))
    }

    fn graph(&self) -> Res<Graph> {
        self.lc
            .graph()
            .map_err(|e| Error::Input(e.to_string()))?
            .ok_or_else(|| Error::Input("model.graph is missing".into()))
    }

    fn alpha(&self) -> Res<Rational> {
        let a = self.lc.config.model.alpha.as_ref().ok_or_else(|| Error::Input("model.alpha is missing".into()))?;
        exact(a, "model.alpha")
    }

    fn actions(&self) -> Res<AdmissibleActions> {
        match &self.lc.config.model.transitions {
            Some(t) => AdmissibleActions::new(t.laws.first().map_or(0, Vec::len), t.actions.clone()),
            None => AdmissibleActions::from_graph(&self.graph()?),
        }
    }

    fn transition(&self) -> Res<TransitionModel> {
        let m = &self.lc.config.model;
        let actions = self.actions()?;
        if let Some(t) = &m.transitions {
            return TransitionModel::tabular(actions, t.laws.clone());
        }
        match &m.common_noise {
            Some(noise) => {
                let outcomes = noise
                    .alphas
                    .iter()
                    .zip(&noise.probs)
                    .map(|(a, p)| {
                        let alpha = exact(a, "model.common_noise.alphas")?.to_f64();
                        Ok(NoiseOutcome {
                            prob: exact(p, "model.common_noise.probs")?.to_f64(),
                            value: alpha,
                            kernel: Kernel::AlphaIntent { alpha },
                        })
                    })
                    .collect::<Res<Vec<_>>>()?;
                TransitionModel::with_common_noise(actions.d(), actions, outcomes)
            }
            None => TransitionModel::alpha_intent(actions, self.alpha()?.to_f64()),
        }
    }

    fn reward(&self, d: usize, m: usize) -> Res<RewardModel> {
        match self.lc.config.model.reward.as_ref() {
            Some(RewardSpec::Spread) => RewardModel::spread(self.distance()?.to_f64()),
            Some(RewardSpec::Zero) => Ok(RewardModel::zero(d, m)),
            Some(RewardSpec::Constant { value }) => Ok(RewardModel::constant(d, m, *value)),
            Some(RewardSpec::Tabular { values }) => RewardModel::tabular(Matrix::from_rows(values.clone())?),
            Some(RewardSpec::Indicator { rewarded, positions, center, radius }) => {
                RewardModel::indicator(*rewarded, positions.clone(), *center, *radius)
            }
            None => Err(Error::Input("model.reward is missing".into())),
        }
    }

    fn model(&self) -> Res<MeanFieldModel> {
        let t = self.transition()?;
        let r = self.reward(t.d(), t.actions().m())?;
        MeanFieldModel::new(t, r)
    }

    fn spec(&self) -> Res<DiscountSpec> {
        let p = &self.lc.config.parameters;
        let beta = p.beta.ok_or_else(|| Error::Input("parameters.beta is missing".into()))?;
        DiscountSpec::new(
            beta,
            p.tolerance.unwrap_or(DEFAULT_TOLERANCE),
            p.max_iterations.unwrap_or(DEFAULT_MAX_ITERATIONS),
        )
    }

    fn initial_measure(&self, d: usize) -> Res<SimplexVector> {
        let p = &self.lc.config.parameters;
        match (&p.initial_measure, p.initial_state) {
            (Some(w), _) => SimplexVector::new(w.clone()),
            (None, Some(x)) if x < d => Ok(SimplexVector::point_mass(d, x)),
            _ => Err(Error::Input("parameters.initial_state is missing or out of range".into())),
        }
    }

    /// Static optimum of the model distance: exact when small enough.
    fn static_optimum(&self) -> Res<Vec<Rational>> {
        let dist = self.distance()?;
        if dist.rows() <= MAX_EXACT_DIM {
            Ok(maximize_spread_exact(&dist)?.mu)
        } else {
            maximize_spread(&dist.to_f64())?
                .mu
                .as_slice()
                .iter()
                .map(|&v| mfmdp::numeric::rational_from_f64(v))
                .collect()
        }
    }
}

/// Balance kernel, its inversion, and the policy handed to the simulators.
struct BuiltPolicy {
    target: Vec<Rational>,
    kappa: Rational,
    kernel: Matrix<Rational>,
    q: Matrix<Rational>,
    policy: ConditionalPolicy,
}

fn build_policy(ctx: &Context<'_>) -> Res<(ConditionalPolicy, Option<BuiltPolicy>)> {
    let spec = ctx
        .lc
        .config
        .task
        .policy
        .as_ref()
        .ok_or_else(|| Error::Input("task.policy is missing".into()))?;
    let actions = ctx.actions()?;
    match spec {
        PolicySpec::Table { rows } => Ok((ConditionalPolicy::new(Matrix::from_rows(rows.clone())?, &actions)?, None)),
        PolicySpec::Balance { target, kappa } => {
            let graph = ctx.graph()?;
            let target = match target {
                Some(t) => {
                    let t = t.iter().map(|v| exact(v, "task.policy.target")).collect::<Res<Vec<_>>>()?;
                    let total = t.iter().cloned().fold(Rational::zero(), |a, b| a + b);
                    t.into_iter().map(|v| v / total.clone()).collect()
                }
                None => ctx.static_optimum()?,
            };
            let kappa = match kappa {
                Some(k) => exact(k, "task.policy.kappa")?,
                None => default_kappa(&target, &graph)?,
            };
            let kernel = build_balance_kernel(&target, &graph, kappa.clone())?.p;
            let q = invert_kernel(&kernel, ctx.alpha()?, &actions)?;
            let policy = ConditionalPolicy::new(q.to_f64(), &actions)?;
            Ok((policy.clone(), Some(BuiltPolicy { target, kappa, kernel, q, policy })))
        }
    }
}

/// Runs the configured task and returns its files.
pub fn execute(lc: &LoadedConfig, seed: Option<u64>) -> Res<Artifacts> {
    let ctx = Context { lc, seed };
    let mut out = Artifacts::default();
    match lc.config.task.kind {
        TaskKind::SolveStatic => solve_static(&ctx, &mut out)?,
        TaskKind::BuildPolicy => policy_task(&ctx, &mut out)?,
        TaskKind::Flow => flow_task(&ctx, &mut out)?,
        TaskKind::AverageReward => average_task(&ctx, &mut out)?,
        TaskKind::Tauber => tauber_task(&ctx, &mut out)?,
        TaskKind::SimulateAgents => simulate_task(&ctx, &mut out)?,
        TaskKind::ValueIterate => value_task(&ctx, &mut out)?,
        TaskKind::ContractionCheck => contraction_task(&ctx, &mut out)?,
        TaskKind::CommonNoise => common_noise_task(&ctx, &mut out)?,
        TaskKind::Market => market_task(&ctx, &mut out)?,
    }
    Ok(out)
}

fn solve_static(ctx: &Context<'_>, out: &mut Artifacts) -> Res<()> {
    let dist = ctx.distance()?;
    if dist.rows() <= MAX_EXACT_DIM {
        let best = maximize_spread_exact(&dist)?;
        out.add("static.csv", mass_table(&best.mu));
        out.add(
            "static_summary.csv",
            summary(&[
                ("method", "support-enumeration".into()),
                ("value", best.value.to_f64().to_string()),
                ("value_exact", best.value.to_string()),
                ("support_size", best.support.len().to_string()),
                ("maximizers", best.maximizers.len().to_string()),
                ("faces_examined", best.faces_examined.to_string()),
                ("kkt_residual", best.kkt_residual.to_string()),
            ]),
        );
    } else {
        let best = maximize_spread(&dist.to_f64())?;
        let mut csv = Csv::new(&["node", "mass"]);
        for (x, m) in best.mu.as_slice().iter().enumerate() {
            csv.row(&[&x, m]);
        }
        out.add("static.csv", csv.into_string());
        out.add(
            "static_summary.csv",
            summary(&[("method", "projected-gradient".into()), ("value", best.value.to_string())]),
        );
    }
    Ok(())
}

fn policy_task(ctx: &Context<'_>, out: &mut Artifacts) -> Res<()> {
    let (_, built) = build_policy(ctx)?;
    let Some(b) = built else {
        return Err(Error::Input("build-policy needs task.policy of kind balance".into()));
    };
    write_policy(ctx, &b, out)
}

/// Target law, balance kernel, inverted policy and their diagnostics.
fn write_policy(ctx: &Context<'_>, b: &BuiltPolicy, out: &mut Artifacts) -> Res<()> {
    let actions = ctx.actions()?;
    let bounds = feasibility_bounds(&b.kernel, &actions)?;
    let residual = verify_stationarity(&b.kernel, &b.target);
    out.add("target.csv", mass_table(&b.target));
    out.add("kernel.csv", matrix_table(&b.kernel, "from", "to"));
    out.add("policy.csv", matrix_table(&b.q, "state", "action"));
    out.add(
        "policy_summary.csv",
        summary(&[
            ("kappa", b.kappa.to_string()),
            ("alpha", ctx.alpha()?.to_string()),
            ("minimal_alpha", bounds.minimal.to_string()),
            ("sufficient_alpha", bounds.sufficient.to_string()),
            ("stationarity_residual", residual.to_string()),
            ("policy_rows", b.policy.d().to_string()),
        ]),
    );
    Ok(())
}

fn horizon(ctx: &Context<'_>) -> Res<usize> {
    ctx.lc.config.parameters.horizon.ok_or_else(|| Error::Input("parameters.horizon is missing".into()))
}

fn flow_task(ctx: &Context<'_>, out: &mut Artifacts) -> Res<()> {
    let model = ctx.model()?;
    let (policy, built) = build_policy(ctx)?;
    let mu0 = ctx.initial_measure(model.d())?;
    let schedule = Schedule::Stationary(&policy);
    let traj = flow(&mu0, schedule, &model.transition, horizon(ctx)?, ctx.seed)?;
    let rewards = flow_rewards(&traj, schedule, &model.reward)?;
    if let Some(b) = &built {
        write_policy(ctx, b, out)?;
    }

    let mut tidy = Csv::new(&["step", "node", "mass"]);
    for (k, mu) in traj.measures.iter().enumerate() {
        for (x, m) in mu.as_slice().iter().enumerate() {
            tidy.row(&[&k, &x, m]);
        }
    }
    out.add("flow.csv", tidy.into_string());

    // Distance to the target law when both a target and a metric are known.
    let target = match (&built, ctx.lc.config.model.distance.is_some()) {
        (Some(b), true) => Some((
            SimplexVector::new(b.target.iter().map(Scalar::to_f64).collect())?,
            FiniteMetric::new(ctx.distance()?.to_f64())?,
        )),
        _ => None,
    };
    let mut header = vec!["step", "reward", "z0"];
    if target.is_some() {
        header.push("w1_to_target");
    }
    let mut csv = Csv::new(&header);
    for (k, mu) in traj.measures.iter().enumerate() {
        let mut cells = vec![
            k.to_string(),
            rewards[k].to_string(),
            traj.noise.get(k).copied().flatten().map_or(String::new(), |z| z.to_string()),
        ];
        if let Some((t, metric)) = &target {
            cells.push(wasserstein_finite(mu, t, metric)?.to_string());
        }
        csv.row_strings(cells);
    }
    out.add("flow_rewards.csv", csv.into_string());
    Ok(())
}

fn average_task(ctx: &Context<'_>, out: &mut Artifacts) -> Res<()> {
    let model = ctx.model()?;
    let (policy, built) = build_policy(ctx)?;
    let mu0 = ctx.initial_measure(model.d())?;
    let schedule = Schedule::Stationary(&policy);
    let n = horizon(ctx)?;
    let traj = flow(&mu0, schedule, &model.transition, n.saturating_sub(1), ctx.seed)?;
    let rewards = flow_rewards(&traj, schedule, &model.reward)?;
    let rep = average_reward(&rewards)?;
    let mut pairs = vec![
        ("steps", rep.n.to_string()),
        ("cesaro_average", rep.cesaro.to_string()),
        ("tail_min", rep.tail_min.to_string()),
        ("tail_max", rep.tail_max.to_string()),
        ("tail_mean", rep.tail_mean.to_string()),
    ];
    if let (Some(b), Some(RewardSpec::Spread)) = (&built, &ctx.lc.config.model.reward) {
        let v = evaluate_spread(&b.target, &ctx.distance()?);
        pairs.push(("target_value", v.to_f64().to_string()));
        pairs.push(("target_value_exact", v.to_string()));
        pairs.push(("gap", (rep.cesaro - v.to_f64()).abs().to_string()));
    }
    out.add("average.csv", summary(&pairs));
    Ok(())
}

fn tauber_task(ctx: &Context<'_>, out: &mut Artifacts) -> Res<()> {
    let model = ctx.model()?;
    let (policy, _) = build_policy(ctx)?;
    let mu0 = ctx.initial_measure(model.d())?;
    let p = &ctx.lc.config.parameters;
    let betas = p.betas.clone().ok_or_else(|| Error::Input("parameters.betas is missing".into()))?;
    let rep = tauber_check(&model, &policy, &mu0, &betas, p.tolerance.unwrap_or(1e-10))?;
    let mut csv = Csv::new(&["beta", "horizon", "scaled_value", "rho", "gap", "abelian_bound"]);
    for r in &rep.rows {
        csv.row(&[&r.beta, &r.horizon, &r.scaled_value, &r.rho, &r.gap, &r.abelian_bound]);
    }
    out.add("tauber.csv", csv.into_string());
    out.add(
        "tauber_summary.csv",
        summary(&[
            ("average", rep.average.cesaro.to_string()),
            ("gaps_monotone", rep.gaps_monotone.to_string()),
            ("rho_bounded", rep.rho_bounded.to_string()),
            ("abelian_ok", rep.abelian_ok.to_string()),
            ("passed", rep.passed().to_string()),
        ]),
    );
    Ok(())
}

fn simulate_task(ctx: &Context<'_>, out: &mut Artifacts) -> Res<()> {
    let model = ctx.model()?;
    let (policy, _) = build_policy(ctx)?;
    let p = &ctx.lc.config.parameters;
    let n = p.n.ok_or_else(|| Error::Input("parameters.n is missing".into()))?;
    let seed = ctx.seed.ok_or_else(|| Error::Input("parameters.seed is missing".into()))?;
    let init = match (&p.initial_measure, p.initial_state) {
        (Some(w), _) => InitialCondition::Measure { n, mu: SimplexVector::new(w.clone())? },
        (None, Some(x)) => InitialCondition::Configuration(AgentConfiguration::new(vec![x; n])?),
        _ => return Err(Error::Input("parameters.initial_state is missing".into())),
    };
    let controller = match p.controller.unwrap_or(ControllerKind::Decentralized) {
        ControllerKind::Decentralized => Controller::Decentralized(&policy),
        ControllerKind::Discretized => Controller::Discretized(&policy),
    };
    let reps = p.replications.unwrap_or(1).max(1);
    let records = replicate(&model, controller, &init, horizon(ctx)?, seed, reps)?;
    let mut tidy = Csv::new(&["replication", "step", "node", "mass"]);
    let mut rewards = Csv::new(&["replication", "seed", "step", "mean_reward", "z0"]);
    for (r, rec) in records.iter().enumerate() {
        for (k, m) in rec.measures.iter().enumerate() {
            for (x, w) in m.to_simplex().as_slice().iter().enumerate() {
                tidy.row(&[&r, &k, &x, w]);
            }
            let z = rec.common_noise.get(k).copied().flatten().map_or(String::new(), |z| z.to_string());
            rewards.row(&[&r, &rec.seed, &k, &rec.mean_rewards[k], &z]);
        }
    }
    out.add("agents.csv", tidy.into_string());
    out.add("agent_rewards.csv", rewards.into_string());
    Ok(())
}

fn value_task(ctx: &Context<'_>, out: &mut Artifacts) -> Res<()> {
    let model = ctx.model()?;
    let spec = ctx.spec()?;
    let p = &ctx.lc.config.parameters;
    let method = ctx.lc.config.task.method.ok_or_else(|| Error::Input("task.method is missing".into()))?;
    let d = model.d();
    let n = p.n.unwrap_or(0);
    let product = |out: &mut Artifacts| -> Res<_> {
        let v = value_iterate_product(&model, n, &spec)?;
        let mut header: Vec<String> = (0..n).map(|i| format!("agent_{i}")).collect();
        header.push("value".into());
        let mut csv = Csv::with_header(header);
        for (idx, val) in v.values.iter().enumerate() {
            let mut cells: Vec<String> = decode_configuration(idx, d, n).iter().map(|s| s.to_string()).collect();
            cells.push(val.to_string());
            csv.row_strings(cells);
        }
        out.add("product_values.csv", csv.into_string());
        Ok(v)
    };
    let empirical = |out: &mut Artifacts| -> Res<_> {
        let j = value_iterate_empirical(&model, n, &spec)?;
        let mut header: Vec<String> = (0..d).map(|x| format!("count_{x}")).collect();
        header.push("value".into());
        let mut csv = Csv::with_header(header);
        for (counts, val) in j.states.iter().zip(&j.values) {
            let mut cells: Vec<String> = counts.iter().map(|c| c.to_string()).collect();
            cells.push(val.to_string());
            csv.row_strings(cells);
        }
        out.add("empirical_values.csv", csv.into_string());
        Ok(j)
    };
    match method {
        Method::Product => {
            product(out)?;
        }
        Method::Empirical => {
            empirical(out)?;
        }
        Method::Compare => {
            let v = product(out)?;
            let j = empirical(out)?;
            let gap = check_equivalence(&v, &j)?;
            let bound = 2.0 * spec.tolerance;
            out.add(
                "equivalence.csv",
                summary(&[
                    ("n", n.to_string()),
                    ("beta", spec.beta.to_string()),
                    ("tolerance", spec.tolerance.to_string()),
                    ("max_discrepancy", gap.to_string()),
                    ("bound", bound.to_string()),
                    ("within_bound", (gap <= bound).to_string()),
                ]),
            );
        }
        Method::Limit => {
            let m = p.grid_resolution.ok_or_else(|| Error::Input("parameters.grid_resolution is missing".into()))?;
            let grid = SimplexGrid::new(d, m)?;
            let table = value_iterate_limit(&model, &spec, &grid, p.action_resolution.unwrap_or(m))?;
            out.add("limit_values.csv", table.to_csv());
        }
    }
    Ok(())
}

fn atoms(list: &[[Num; 2]], what: &str) -> Res<AtomMeasure<Rational>> {
    AtomMeasure::new(list.iter().map(|[x, p]| Ok((exact(x, what)?, exact(p, what)?))).collect::<Res<Vec<_>>>()?)
}

fn contraction_task(ctx: &Context<'_>, out: &mut Artifacts) -> Res<()> {
    let spec = ctx.lc.config.model.linear.as_ref().ok_or_else(|| Error::Input("model.linear is missing".into()))?;
    let policy = match &spec.policy {
        LinearPolicySpec::Affine { a0, slope } => PolicyFamily::AffinePoint {
            a0: exact(a0, "model.linear.policy.a0")?,
            slope: exact(slope, "model.linear.policy.slope")?,
        },
        LinearPolicySpec::Mixture { first, second, w0, slope } => PolicyFamily::Mixture {
            first: atoms(first, "model.linear.policy.first")?,
            second: atoms(second, "model.linear.policy.second")?,
            w0: exact(w0, "model.linear.policy.w0")?,
            slope: exact(slope, "model.linear.policy.slope")?,
        },
    };
    let noise = spec
        .noise
        .iter()
        .map(|[z, p]| Ok((exact(z, "model.linear.noise")?, exact(p, "model.linear.noise")?)))
        .collect::<Res<Vec<_>>>()?;
    let model = LinearMFModel::new(
        exact(&spec.gamma_s, "model.linear.gamma_s")?,
        exact(&spec.gamma_a, "model.linear.gamma_a")?,
        exact(&spec.gamma_w, "model.linear.gamma_w")?,
        policy,
        noise,
    )?;
    let p = &ctx.lc.config.parameters;
    let steps = p.horizon.unwrap_or(50);
    // Point masses spread evenly over [0,1].
    let starts = p.starts.unwrap_or(5).max(1);
    let mut csv = Csv::new(&["start", "step", "distance", "ratio"]);
    let mut worst: f64 = 0.0;
    let mut passed = true;
    let mut gamma = 0.0;
    let mut stationary = String::new();
    for s in 0..starts {
        let x = if starts == 1 { Rational::zero() } else { Rational::ratio(s as i64, starts as i64 - 1) };
        let rep = contraction_check(&model, &AtomMeasure::point(x)?, steps)?;
        for (k, dist) in rep.distances.iter().enumerate() {
            let ratio = rep.ratios.get(k).copied().flatten().map_or(String::new(), |r| r.to_string());
            csv.row(&[&s, &k, dist, &ratio]);
        }
        worst = worst.max(rep.max_ratio);
        passed &= rep.passed;
        gamma = rep.gamma;
        stationary = rep
            .stationary
            .atoms()
            .iter()
            .map(|(x, w)| format!("{x}:{w}"))
            .collect::<Vec<_>>()
            .join(" ");
    }
    out.add("contraction.csv", csv.into_string());
    out.add(
        "contraction_summary.csv",
        summary(&[
            ("gamma", gamma.to_string()),
            ("gamma_exact", model.gamma().to_string()),
            ("max_ratio", worst.to_string()),
            ("passed", passed.to_string()),
            ("stationary_atoms", stationary),
        ]),
    );
    Ok(())
}

fn common_noise_task(ctx: &Context<'_>, out: &mut Artifacts) -> Res<()> {
    let dist = ctx.distance()?;
    let noise = ctx
        .lc
        .config
        .model
        .common_noise
        .as_ref()
        .ok_or_else(|| Error::Input("model.common_noise is missing".into()))?;
    let spec = CommonNoiseSpec {
        alphas: noise.alphas.iter().map(|a| exact(a, "model.common_noise.alphas")).collect::<Res<Vec<_>>>()?,
        probs: noise.probs.iter().map(|p| exact(p, "model.common_noise.probs")).collect::<Res<Vec<_>>>()?,
        gamma: noise.gamma.unwrap_or(dist.rows()),
    };
    let sol = optimize_common_noise(&dist, &spec)?;
    out.add("common_noise.csv", mass_table(&sol.nu));
    out.add(
        "common_noise_summary.csv",
        summary(&[
            ("m1", sol.moments.m1.to_string()),
            ("m2", sol.moments.m2.to_string()),
            ("m3", sol.moments.m3.to_string()),
            ("objective", sol.objective.to_string()),
            ("expected_spread", sol.expected_spread.to_f64().to_string()),
            ("expected_spread_exact", sol.expected_spread.to_string()),
            ("kkt_residual", sol.kkt_residual.to_string()),
        ]),
    );
    Ok(())
}

fn market_task(ctx: &Context<'_>, out: &mut Artifacts) -> Res<()> {
    let m = ctx.lc.config.model.market.as_ref().ok_or_else(|| Error::Input("model.market is missing".into()))?;
    let pt = |p: &[Num; 2]| -> Res<[Rational; 2]> { Ok([exact(&p[0], "model.market")?, exact(&p[1], "model.market")?]) };
    let market = RectangleMarket { b: pt(&m.b)?, c: pt(&m.c)?, d: pt(&m.d)?, e: pt(&m.e)?, a: pt(&m.a)? };
    let sol = market_place_solution(&market)?;
    let mut csv = Csv::new(&["corner", "x", "y", "mass", "exact"]);
    for (name, (p, w)) in ["B", "C", "D", "E"].iter().zip(market.corners().iter().zip(&sol.masses)) {
        csv.row(&[name, &p[0], &p[1], &w.to_f64(), w]);
    }
    out.add("market.csv", csv.into_string());
    out.add(
        "market_summary.csv",
        summary(&[
            ("px", sol.px.to_string()),
            ("py", sol.py.to_string()),
            ("value", sol.value.to_f64().to_string()),
            ("value_exact", sol.value.to_string()),
        ]),
    );
    Ok(())
}

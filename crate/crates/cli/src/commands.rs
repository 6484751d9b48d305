use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use anyhow::{bail, Context};

use cagebo_core::cvae::{train, CvaeModel, Reconstruction};
use cagebo_core::optimizer::report::{trace_csv, Aggregate, RunSummary};
use cagebo_core::optimizer::{MethodSettings, Registry};
use cagebo_core::redistricting::{
    check_plan, evaluate_plan, plan_decode, render_plan_svg, DistrictingInstance, Plan,
};
use cagebo_core::{Dataset, Error, RngSeed};

use crate::config::{Built, ExperimentConfig, ProblemConfig};
use crate::plot::{collect_runs, convergence_svg};
use crate::Common;

fn load_config(common: &Common) -> anyhow::Result<ExperimentConfig> {
    let mut config = ExperimentConfig::load(&common.config)?;
    if let Some(out) = &common.out {
        config.output_dir = out.clone();
    }
    if let Some(m) = &common.method {
        config.method = m.clone();
    }
    Ok(config)
}

fn default_reconstruction(problem: &ProblemConfig) -> Reconstruction {
    match problem {
        ProblemConfig::Synthetic { .. } => Reconstruction::SquaredError,
        ProblemConfig::Districting { .. } => Reconstruction::Bernoulli,
    }
}

fn write(path: &Path, contents: &str) -> anyhow::Result<()> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }
    fs::write(path, contents).with_context(|| format!("writing {}", path.display()))
}

fn load_dataset(config: &ExperimentConfig) -> anyhow::Result<Dataset> {
    let path = config.dataset_path();
    Dataset::load(&path).with_context(|| format!("loading dataset {} (run gen-data first)", path.display()))
}

pub fn gen_data(common: &Common) -> anyhow::Result<()> {
    let config = load_config(common)?;
    let seed = RngSeed(common.seed.unwrap_or(config.data_seed));
    let dataset = config.problem.generate(seed)?;
    let path = config.dataset_path();
    write(&path, &dataset.to_json()?)?;
    if let Some(instance) = config.problem.instance()? {
        write(&config.output_dir.join("instance.json"), &instance.to_json()?)?;
    }
    let feasible = dataset.feasible_count();
    println!(
        "wrote {} items to {} ({} feasible, {} infeasible)",
        dataset.len(),
        path.display(),
        feasible,
        dataset.len() - feasible
    );
    Ok(())
}

pub fn train_cvae(common: &Common) -> anyhow::Result<()> {
    let config = load_config(common)?;
    let dataset = load_dataset(&config)?;
    let mut cvae = config.cvae_config(default_reconstruction(&config.problem))?;
    match config.method.as_str() {
        "vae-bo" => cvae.conditional = false,
        "cagebo" => cvae.conditional = true,
        _ => {}
    }
    if let Some(s) = common.seed {
        cvae.seed = s;
    }
    let (model, report) = train(&dataset, &cvae)?;
    let model_path = config.model_path();
    write(&model_path, &model.to_json()?)?;
    write(&config.output_dir.join("loss.csv"), &report.to_csv())?;
    match report.epochs.last() {
        Some(last) => println!(
            "trained {} epochs, final loss {:.6}; model at {}",
            report.len(),
            last.loss,
            model_path.display()
        ),
        None => println!("saved untrained model at {}", model_path.display()),
    }
    Ok(())
}

fn method_settings(config: &ExperimentConfig) -> anyhow::Result<MethodSettings> {
    let cvae = config.cvae_config(default_reconstruction(&config.problem))?;
    let pretrained = match &config.model {
        None => None,
        Some(path) => {
            let model = CvaeModel::load(path).with_context(|| format!("loading model {}", path.display()))?;
            let wants_conditional = match config.method.as_str() {
                "cagebo" => Some(true),
                "vae-bo" => Some(false),
                _ => None,
            };
            if wants_conditional.is_some_and(|c| c != model.is_conditional()) {
                return Err(Error::InvalidConfig(format!(
                    "model {} does not match method {}",
                    path.display(),
                    config.method
                ))
                .into());
            }
            Some(Arc::new(model))
        }
    };
    Ok(MethodSettings {
        cvae,
        optimizer: config.optimizer.clone(),
        pretrained,
    })
}

pub fn optimize(common: &Common, wall_clock: bool) -> anyhow::Result<()> {
    let mut config = load_config(common)?;
    if let Some(s) = common.seed {
        config.seeds = vec![s];
    }
    let dataset = load_dataset(&config)?;
    let built = config.problem.build(&dataset)?;
    let settings = method_settings(&config)?;
    let optimizer = Registry::builtin().create(&config.method, &settings)?;
    let method_dir = config.output_dir.join(&config.method);

    let mut curves = Vec::with_capacity(config.seeds.len());
    for &seed in &config.seeds {
        let result = optimizer
            .run(&dataset, built.problem(), RngSeed(seed))
            .with_context(|| format!("{} seed {seed}", config.method))?;
        let dir = method_dir.join(format!("seed_{seed}"));
        write(&dir.join("trace.csv"), &trace_csv(&result, wall_clock))?;
        let mut summary = RunSummary::from(&result);
        if !wall_clock {
            summary.seconds = 0.0;
        }
        write(&dir.join("summary.json"), &serde_json::to_string_pretty(&summary)?)?;
        if let Some(report) = &result.training {
            write(&dir.join("loss.csv"), &report.to_csv())?;
        }
        if let Built::Districting(p) = &built {
            let inst = p.instance();
            let plan = plan_decode(result.incumbent.as_slice(), inst.regions(), inst.zones())?;
            let eval = evaluate_plan(inst, &plan)?;
            write(&dir.join("plan.json"), &serde_json::to_string(&plan)?)?;
            write(&dir.join("plan.svg"), &render_plan_svg(inst, &plan, &eval))?;
        }
        println!(
            "{} seed {seed}: best {:.6} after {} evaluations ({} projected)",
            result.method,
            result.incumbent_value,
            result.evaluations(),
            result.projections
        );
        curves.push((seed, result.best_curve()));
    }
    let aggregate = Aggregate::from_curves(&config.method, &curves)?;
    write(&method_dir.join("aggregate.json"), &serde_json::to_string_pretty(&aggregate)?)?;
    if let Some(last) = aggregate.rows.last() {
        println!(
            "{} over {} seeds: median {:.6}, 95% CI [{:.6}, {:.6}]",
            config.method,
            aggregate.seeds.len(),
            last.median,
            last.ci_low,
            last.ci_high
        );
    }
    Ok(())
}

fn load_plan(path: &Path) -> anyhow::Result<Plan> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    serde_json::from_str(&text)
        .map_err(|e| Error::InvalidConfig(format!("plan {}: {e}", path.display())).into())
}

pub fn plot(
    dirs: &[PathBuf],
    instance: Option<&Path>,
    plan: Option<&Path>,
    out: &Path,
) -> anyhow::Result<()> {
    let svg = match (instance, plan) {
        (Some(i), Some(p)) => {
            let inst = DistrictingInstance::load(i).with_context(|| format!("loading {}", i.display()))?;
            let plan = load_plan(p)?;
            let eval = evaluate_plan(&inst, &plan)?;
            render_plan_svg(&inst, &plan, &eval)
        }
        (None, None) => {
            if dirs.is_empty() {
                bail!("no run directories given");
            }
            let runs = collect_runs(dirs)?;
            convergence_svg(&runs)
        }
        _ => return Err(Error::InvalidConfig("--instance and --plan go together".into()).into()),
    };
    write(out, &svg)?;
    println!("wrote {}", out.display());
    Ok(())
}

pub fn eval_plan(instance: &Path, plan: &Path) -> anyhow::Result<()> {
    let inst = DistrictingInstance::load(instance).with_context(|| format!("loading {}", instance.display()))?;
    let plan = load_plan(plan)?;
    check_plan(&inst, &plan).map_err(Error::InfeasiblePlan)?;
    let eval = evaluate_plan(&inst, &plan)?;
    let mut report = String::from("zone\tunits\tlambda\ttau\trho\tloss\n");
    for z in &eval.zones {
        writeln!(
            report,
            "{}\t{}\t{}\t{}\t{}\t{}",
            z.zone,
            z.members.len(),
            z.arrival_rate,
            z.mean_travel,
            z.workload,
            z.loss_probability
        )?;
    }
    writeln!(report, "variance\t{}", eval.variance)?;
    print!("{report}");
    Ok(())
}

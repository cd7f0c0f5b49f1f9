use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use anyhow::{anyhow, bail, Context, Result};
use part_core::io::{
    format_logistic, format_vector, parse_config, parse_logistic, parse_vector, read_draws, write_atomic,
    write_draws,
};
use part_core::metrics::{evaluate, histogram};
use part_core::rng::rng_from_seed;
use part_core::samplers::{
    adaptive_rwm_chain, gen_bimodal, gen_logistic_data, gen_rare_bernoulli, label_sorted_split, random_split,
    BernoulliSpec, BimodalSpec, LogisticData, LogisticPosterior, LogisticSpec, RwmConfig,
};
use part_core::{
    aggregate, average_aggregate, derive_seed, parametric_aggregate, weighted_aggregate, AggregationConfig,
    CutRule, DrawMatrix, SampleSet, Smoothing, Strategy,
};

use crate::args::{AggregateArgs, ChainArgs, Cli, Command, DensityArgs, EvalArgs, GenCommand, Method, SmoothingArg, Split};
use crate::manifest::Manifest;

pub fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Gen { which } => gen(which),
        Command::Chain(a) => chain(a),
        Command::Aggregate(a) => aggregate_cmd(a),
        Command::Eval(a) => eval(a),
        Command::Density(a) => density(a),
    }
}

fn subset_path(dir: &Path, i: usize) -> PathBuf {
    dir.join(format!("subset_{i}.csv"))
}

fn create_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    write_atomic(path, text.as_bytes()).with_context(|| format!("writing {}", path.display()))
}

fn write_subsets(dir: &Path, set: &SampleSet) -> Result<()> {
    for (i, s) in set.subsets().iter().enumerate() {
        let path = subset_path(dir, i);
        write_draws(s, &path).with_context(|| format!("writing {}", path.display()))?;
    }
    Ok(())
}

fn gen(which: GenCommand) -> Result<()> {
    match which {
        GenCommand::Bimodal { m, n, seed, out } => {
            let spec = BimodalSpec { m, n_per_subset: n, seed, ..Default::default() };
            let (set, truth) = gen_bimodal(&spec)?;
            create_dir(&out)?;
            write_subsets(&out, &set)?;
            let (lo, hi) = truth.support();
            let mut grid = String::from("x,density\n");
            for (x, d) in truth.grid(lo, hi, 2001) {
                let _ = writeln!(grid, "{x:.16e},{d:.16e}");
            }
            write_text(&out.join("truth_grid.csv"), &grid)?;
            let mut man = Manifest::new("gen bimodal");
            man.set("m", m);
            man.set("n", n);
            man.set("seed", seed);
            man.write(&out.join("manifest"))
        }
        GenCommand::Bernoulli { n_obs, m, theta, draws, seed, out } => {
            let spec = BernoulliSpec { n_obs, m, theta, n_draws: draws, seed, ..Default::default() };
            let (set, truth) = gen_rare_bernoulli(&spec)?;
            create_dir(&out)?;
            write_subsets(&out, &set)?;
            write_text(
                &out.join("truth.txt"),
                &format!("alpha={}\nbeta={}\nsuccesses={}\n", truth.alpha, truth.beta, truth.successes),
            )?;
            let mut man = Manifest::new("gen bernoulli");
            man.set("n_obs", n_obs);
            man.set("m", m);
            man.set("theta", spec.success_probability());
            man.set("draws", draws);
            man.set("seed", seed);
            man.write(&out.join("manifest"))
        }
        GenCommand::Logistic { n_obs, p, m, split, seed, out } => {
            let spec = LogisticSpec { n_obs, p, m, seed, ..Default::default() };
            let data = gen_logistic_data(&spec)?;
            let groups = match split {
                Split::Random => random_split(n_obs, m, &mut rng_from_seed(derive_seed(seed, 1))),
                Split::LabelSorted => label_sorted_split(data.labels(), m),
            };
            let mut assignment = vec![0; n_obs];
            for (i, g) in groups.iter().enumerate() {
                g.iter().for_each(|&j| assignment[j] = i);
            }
            create_dir(&out)?;
            write_text(&out.join("data.csv"), &format_logistic(&data, &assignment))?;
            write_text(&out.join("theta_star.csv"), &format_vector(&data.theta_star))?;
            let mut man = Manifest::new("gen logistic");
            man.set("n_obs", n_obs);
            man.set("p", p);
            man.set("m", m);
            man.set("split", format!("{split:?}"));
            man.set("seed", seed);
            man.write(&out.join("manifest"))
        }
    }
}

fn read_to_string(path: &Path) -> Result<String> {
    fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
}

fn chain(a: ChainArgs) -> Result<()> {
    let theta_star = parse_vector(&read_to_string(&a.theta_star)?)?;
    let (data, assignment) = parse_logistic(&read_to_string(&a.data)?, theta_star)?;
    let m = assignment.iter().max().map_or(0, |&i| i + 1);
    let mut groups = vec![Vec::new(); m];
    for (j, &i) in assignment.iter().enumerate() {
        groups[i].push(j);
    }
    if groups.iter().any(Vec::is_empty) {
        bail!("subset indices in {} are not contiguous from 0", a.data.display());
    }
    let mut jobs: Vec<(String, LogisticData, usize, u64)> = groups
        .iter()
        .enumerate()
        .map(|(i, g)| (format!("subset_{i}.csv"), data.subset(g), m, derive_seed(a.seed, i as u64)))
        .collect();
    if a.full {
        jobs.push(("full.csv".into(), data.clone(), 1, derive_seed(a.seed, u64::MAX)));
    }
    let cfg = RwmConfig { iterations: a.iterations, burn_in: a.burn_in, thin: a.thin, ..Default::default() };
    let p = data.dim();
    let results: Vec<Result<(String, f64, DrawMatrix)>> = std::thread::scope(|scope| {
        let handles: Vec<_> = jobs
            .iter()
            .map(|(name, sub, m, seed)| {
                let cfg = RwmConfig { seed: *seed, ..cfg.clone() };
                scope.spawn(move || {
                    let post = LogisticPosterior::new(sub, *m);
                    let target = |t: &[f64]| post.log_density(t).unwrap_or(f64::NEG_INFINITY);
                    let c = adaptive_rwm_chain(target, &vec![0.0; p], &cfg).with_context(|| format!("chain for {name}"))?;
                    Ok((name.clone(), c.acceptance_rate, c.draws))
                })
            })
            .collect();
        handles.into_iter().map(|h| h.join().map_err(|_| anyhow!("chain thread panicked"))?).collect()
    });
    create_dir(&a.out)?;
    let mut man = Manifest::new("chain");
    man.hash_input(&a.data)?;
    man.hash_input(&a.theta_star)?;
    for (k, v) in [("iterations", a.iterations), ("burn_in", a.burn_in), ("thin", a.thin)] {
        man.set(k, v);
    }
    man.set("seed", a.seed);
    man.set("m", m);
    for ((_, _, _, seed), r) in jobs.iter().zip(results) {
        let (name, rate, draws) = r?;
        write_draws(&draws, &a.out.join(&name))?;
        man.set(&format!("{name}.seed"), seed);
        man.set(&format!("{name}.acceptance_rate"), format!("{rate:.6}"));
    }
    man.write(&a.out.join("manifest"))
}

/// Subset draw files `subset_<i>.csv` in `dir`, ordered by index.
fn subset_files(dir: &Path) -> Result<Vec<PathBuf>> {
    let mut found: Vec<(usize, PathBuf)> = Vec::new();
    for entry in fs::read_dir(dir).with_context(|| format!("listing {}", dir.display()))? {
        let path = entry?.path();
        let name = path.file_name().and_then(|n| n.to_str()).unwrap_or_default();
        if let Some(i) = name.strip_prefix("subset_").and_then(|r| r.strip_suffix(".csv")) {
            if let Ok(i) = i.parse() {
                found.push((i, path));
            }
        }
    }
    found.sort();
    if found.is_empty() {
        bail!("no subset_<i>.csv files in {}", dir.display());
    }
    Ok(found.into_iter().map(|(_, p)| p).collect())
}

const CONFIG_KEYS: [&str; 9] =
    ["method", "trees", "delta_rho", "delta_a", "pairwise", "draws", "intermediate_draws", "smoothing", "seed"];

fn config_value<T: FromStr>(cfg: &BTreeMap<String, String>, key: &str) -> Result<Option<T>> {
    cfg.get(key)
        .map(|v| v.parse::<T>().map_err(|_| anyhow!("config key {key}: cannot parse {v:?}")))
        .transpose()
}

fn config_enum<T: clap::ValueEnum>(cfg: &BTreeMap<String, String>, key: &str) -> Result<Option<T>> {
    cfg.get(key)
        .map(|v| T::from_str(v, false).map_err(|e| anyhow!("config key {key}: {e}")))
        .transpose()
}

fn method_name(m: Method) -> &'static str {
    match m {
        Method::PartKd => "part-kd",
        Method::PartMl => "part-ml",
        Method::Average => "average",
        Method::Weighted => "weighted",
        Method::Parametric => "parametric",
    }
}

fn aggregate_cmd(a: AggregateArgs) -> Result<()> {
    let file_cfg = match &a.config {
        Some(path) => parse_config(&read_to_string(path)?)?,
        None => BTreeMap::new(),
    };
    if let Some(k) = file_cfg.keys().find(|k| !CONFIG_KEYS.contains(&k.as_str())) {
        bail!("unknown config key {k:?}");
    }
    let method = a
        .method
        .or(config_enum(&file_cfg, "method")?)
        .ok_or_else(|| anyhow!("--method is required"))?;
    let defaults = AggregationConfig::new(CutRule::Kd);
    let trees = a.trees.or(config_value(&file_cfg, "trees")?).unwrap_or(defaults.trees);
    let delta_rho = a.delta_rho.or(config_value(&file_cfg, "delta_rho")?).unwrap_or(defaults.delta_rho_final);
    let delta_a = a.delta_a.or(config_value(&file_cfg, "delta_a")?).unwrap_or(defaults.delta_a);
    let pairwise = a.pairwise || config_value(&file_cfg, "pairwise")?.unwrap_or(false);
    let draws = a.draws.or(config_value(&file_cfg, "draws")?).unwrap_or(defaults.n_draws_final);
    let intermediate = a
        .intermediate_draws
        .or(config_value(&file_cfg, "intermediate_draws")?)
        .unwrap_or(defaults.n_draws_intermediate);
    let smoothing = a
        .smoothing
        .or(config_enum(&file_cfg, "smoothing")?)
        .unwrap_or(SmoothingArg::Gaussian);
    let seed = a.seed.or(config_value(&file_cfg, "seed")?).unwrap_or(0);

    let files = subset_files(&a.input)?;
    let subsets = files
        .iter()
        .enumerate()
        .map(|(i, f)| read_draws(f, i).with_context(|| format!("reading {}", f.display())))
        .collect::<Result<Vec<_>>>()?;
    let samples = SampleSet::new(subsets)?;

    let out = match method {
        Method::PartKd | Method::PartMl => {
            let rule = if method == Method::PartKd { CutRule::Kd } else { CutRule::Ml };
            let cfg = AggregationConfig {
                rule,
                strategy: if pairwise { Strategy::Pairwise } else { Strategy::OneStage },
                n_draws_final: draws,
                n_draws_intermediate: intermediate,
                trees,
                delta_rho_final: delta_rho,
                delta_a,
                smoothing: match smoothing {
                    SmoothingArg::Gaussian => Smoothing::default(),
                    SmoothingArg::Uniform => Smoothing::Uniform,
                },
                seed,
            };
            aggregate(&samples, &cfg)?.draws
        }
        Method::Average => average_aggregate(&samples, draws, seed)?,
        Method::Weighted => weighted_aggregate(&samples, draws, seed)?,
        Method::Parametric => parametric_aggregate(&samples, draws, seed)?,
    };
    write_draws(&out, &a.out).with_context(|| format!("writing {}", a.out.display()))?;

    let mut man = Manifest::new("aggregate");
    man.set("method", method_name(method));
    man.set("trees", trees);
    man.set("delta_rho", delta_rho);
    man.set("delta_a", delta_a);
    man.set("pairwise", pairwise);
    man.set("draws", draws);
    man.set("intermediate_draws", intermediate);
    man.set("smoothing", format!("{smoothing:?}").to_lowercase());
    man.set("seed", seed);
    if let Some(c) = &a.config {
        man.hash_input(c)?;
    }
    for f in &files {
        man.hash_input(f)?;
    }
    man.write(&Manifest::path_for_file(&a.out))
}

fn eval(a: EvalArgs) -> Result<()> {
    let truth = read_draws(&a.truth, 0).with_context(|| format!("reading {}", a.truth.display()))?;
    let approx = read_draws(&a.approx, 0).with_context(|| format!("reading {}", a.approx.display()))?;
    let star = a.theta_star.as_deref().map(|p| read_to_string(p).and_then(|t| Ok(parse_vector(&t)?))).transpose()?;
    let report = evaluate(&a.method, &approx, &truth, star.as_deref(), a.seed)?;
    write_text(&a.out, &report.to_csv())?;
    let mut man = Manifest::new("eval");
    man.set("method", &a.method);
    man.set("seed", a.seed);
    man.hash_input(&a.truth)?;
    man.hash_input(&a.approx)?;
    if let Some(p) = &a.theta_star {
        man.hash_input(p)?;
    }
    man.write(&Manifest::path_for_file(&a.out))
}

fn parse_range(s: &str) -> Result<(f64, f64)> {
    let (lo, hi) = s.split_once(':').ok_or_else(|| anyhow!("range must look like LO:HI, got {s:?}"))?;
    let lo: f64 = lo.trim().parse().map_err(|_| anyhow!("bad range start {lo:?}"))?;
    let hi: f64 = hi.trim().parse().map_err(|_| anyhow!("bad range end {hi:?}"))?;
    if !(lo < hi) {
        bail!("range start must be below its end");
    }
    Ok((lo, hi))
}

fn density(a: DensityArgs) -> Result<()> {
    let draws = read_draws(&a.input, 0).with_context(|| format!("reading {}", a.input.display()))?;
    let range = match &a.range {
        Some(r) => parse_range(r)?,
        None => {
            let v = draws.as_slice();
            let lo = v.iter().cloned().fold(f64::INFINITY, f64::min);
            let hi = v.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            if lo < hi { (lo, hi) } else { (lo - 0.5, hi + 0.5) }
        }
    };
    let props = histogram(&draws, a.grid, range)?;
    let width = (range.1 - range.0) / a.grid as f64;
    let mut s = String::from("x,density\n");
    for (b, p) in props[..a.grid].iter().enumerate() {
        let x = range.0 + (b as f64 + 0.5) * width;
        let _ = writeln!(s, "{x:.16e},{:.16e}", p / width);
    }
    write_text(&a.out, &s)?;
    let mut man = Manifest::new("density");
    man.set("grid", a.grid);
    man.set("range", format!("{}:{}", range.0, range.1));
    man.set("outside_fraction", props[a.grid]);
    man.hash_input(&a.input)?;
    man.write(&Manifest::path_for_file(&a.out))
}

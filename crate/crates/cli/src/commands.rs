use std::collections::{BTreeMap, HashSet};
use std::fs;
use std::io::BufReader;
use std::path::Path;

use serde_json::json;
use traitleak::cache::{decode_activity, decode_events, encode_activity, encode_events, EVENTS_MAGIC};
use traitleak::classify::{
    coefficient_trajectories, fit_frame_models, paired_t_test, repeated_eval, write_coefficients_csv, write_eval_csv,
    write_model_dump, write_repeats_csv, EvalSeries, ModelDump, TrainSpec,
};
use traitleak::cohort::{compare_ne_fp, exited_eval, select_cohort, write_gain_csv, write_membership_csv, CohortKind};
use traitleak::featurize::{ActivityTable, Encoding, JoinSource};
use traitleak::infodynamics::{
    category_symbols, information_transfer_series, rank_features_by_residual_entropy, write_ranking_csv,
    write_transfer_csv, Quantizer, TransferOptions,
};
use traitleak::ingest::{
    read_event_log, read_first_edits, read_page_theme_map, read_trait_labels, write_event_log, write_first_edits,
    write_trait_labels, DumpOptions, FirstEdits, IngestReport, TraitLabels, WikiDumpReader,
};
use traitleak::profile::{
    class_feature_shares, class_temporal_means, population_dynamics, write_dynamics_csv, write_shares_csv,
    write_temporal_csv,
};
use traitleak::synth::{generate, reference_config, write_truth_csv, SynthConfig};
use traitleak::{Error, Event};

use crate::args::*;
use crate::error::{CliError, CliResult};
use crate::manifest::{digest_file, hex_digest, Outputs};
use crate::svg::Chart;

pub fn run(cli: Cli) -> CliResult<()> {
    let settings = Settings::load(cli.common.settings.as_deref())?;
    if let Some(n) = cli.common.threads.or(settings.threads) {
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global().map_err(|e| CliError::usage(e.to_string()))?;
    }
    let out = settings.out(&cli.common.out)?;
    let mut outputs = Outputs::new(&out);
    let seed_flag = cli.common.seed;
    let (name, seed, config) = match cli.command {
        Command::Ingest(a) => ("ingest", None, ingest(&settings, a, &mut outputs)?),
        Command::Profile(a) => ("profile", None, profile(&settings, a, &mut outputs)?),
        Command::Featurize(a) => ("featurize", None, featurize(&settings, a, &mut outputs)?),
        Command::TrainEval(a) => {
            let seed = settings.seed(seed_flag);
            ("train-eval", Some(seed), train_eval(&settings, a, seed, &mut outputs)?)
        }
        Command::Infodyn(a) => ("infodyn", None, infodyn(&settings, a, &mut outputs)?),
        Command::CohortEval(a) => {
            let seed = settings.seed(seed_flag);
            ("cohort-eval", Some(seed), cohort_eval(&settings, a, seed, &mut outputs)?)
        }
        Command::Synth(a) => {
            let (seed, config) = synth(&settings, a, seed_flag.or(settings.seed), &mut outputs)?;
            ("synth", Some(seed), config)
        }
        Command::Report(a) => ("report", None, report(a, &out, &mut outputs)?),
    };
    outputs.commit(name, seed, config)
}

fn read_bytes(path: &Path) -> CliResult<Vec<u8>> {
    fs::read(path).map_err(|e| CliError::from(e).at(path))
}

/// Whole small input, digested under `role`.
fn input(path: &Path, role: &str, outputs: &mut Outputs) -> CliResult<Vec<u8>> {
    let bytes = read_bytes(path)?;
    outputs.record_input(role, hex_digest(&bytes));
    Ok(bytes)
}

fn parsed<T>(r: traitleak::Result<T>, path: &Path) -> CliResult<T> {
    r.map_err(|e| CliError::from(e).at(path))
}

/// Event cache or delimited event log, told apart by the cache magic.
fn load_events(path: &Path, outputs: &mut Outputs) -> CliResult<Vec<Event>> {
    let bytes = input(path, "events", outputs)?;
    if bytes.starts_with(&EVENTS_MAGIC) {
        parsed(decode_events(&bytes), path)
    } else {
        parsed(read_event_log(&bytes[..]), path)
    }
}

fn load_activity(path: &Path, outputs: &mut Outputs) -> CliResult<ActivityTable> {
    let bytes = input(path, "features", outputs)?;
    parsed(decode_activity(&bytes), path)
}

fn load_labels(path: &Path, outputs: &mut Outputs) -> CliResult<TraitLabels> {
    let bytes = input(path, "labels", outputs)?;
    parsed(read_trait_labels(&bytes[..]), path)
}

fn load_first_edits(path: &Path, outputs: &mut Outputs) -> CliResult<FirstEdits> {
    let bytes = input(path, "first_edits", outputs)?;
    parsed(read_first_edits(&bytes[..]), path)
}

fn ingest(settings: &Settings, a: IngestArgs, outputs: &mut Outputs) -> CliResult<serde_json::Value> {
    let grid = settings.grid(&a.grid)?;
    let themes = match &a.themes {
        Some(p) => {
            let bytes = input(p, "themes", outputs)?;
            Some(parsed(read_page_theme_map(&bytes[..]), p)?)
        }
        None => None,
    };
    let exclude: HashSet<String> = match &a.exclude {
        Some(p) => {
            let bytes = input(p, "exclude", outputs)?;
            String::from_utf8_lossy(&bytes).lines().map(str::trim).filter(|l| !l.is_empty()).map(String::from).collect()
        }
        None => HashSet::new(),
    };

    let (events, report, first) = if let Some(path) = &a.dump {
        outputs.record_input("dump", digest_file(path).map_err(|e| CliError::from(e).at(path))?);
        let file = fs::File::open(path).map_err(|e| CliError::from(e).at(path))?;
        let options = DumpOptions { exclude_users: exclude.clone() };
        let mut reader = WikiDumpReader::with_options(BufReader::with_capacity(1 << 16, file), grid, themes.as_ref(), options);
        let events = parsed(reader.by_ref().collect::<traitleak::Result<Vec<_>>>(), path)?;
        let (report, first) = reader.into_parts();
        (events, report, first)
    } else {
        let path = a.events.as_ref().expect("clap requires --dump or --events");
        let all = load_events(path, outputs)?;
        let mut report = IngestReport::default();
        let mut first = FirstEdits::new();
        let mut users = HashSet::new();
        let mut events = Vec::new();
        for ev in all {
            report.revisions_scanned += 1;
            if exclude.contains(ev.user.as_str()) {
                report.skipped_excluded += 1;
                continue;
            }
            let e = first.entry(ev.user.clone()).or_insert(ev.timestamp);
            *e = (*e).min(ev.timestamp);
            if !grid.contains(&ev.timestamp) {
                report.skipped_out_of_window += 1;
                continue;
            }
            report.events_emitted += 1;
            report.events_per_category[ev.category.index()] += 1;
            users.insert(ev.user.clone());
            events.push(ev);
        }
        report.users_seen = users.len() as u64;
        (events, report, first)
    };
    if !report.is_conserved() {
        log::warn!("ingest bookkeeping does not add up: {report:?}");
    }
    outputs.write_with("events.bin", |b| encode_events(b, &events))?;
    outputs.json("ingest_report.json", &report)?;
    outputs.write_with("first_edits.csv", |b| write_first_edits(b, &first))?;
    Ok(json!({
        "source": if a.dump.is_some() { "dump" } else { "events" },
        "grid_origin": grid.origin().format("%Y-%m").to_string(),
        "grid_frames": grid.frames(),
    }))
}

fn build_table(settings: &Settings, t: &TableArgs, outputs: &mut Outputs) -> CliResult<(ActivityTable, serde_json::Value)> {
    let grid = settings.grid(&t.grid)?;
    let scheme = settings.scheme(t.scheme)?;
    let events = load_events(&t.events, outputs)?;
    let first = t.first_edits.as_ref().map(|p| load_first_edits(p, outputs)).transpose()?;
    let join = match &first {
        Some(f) => JoinSource::SideTable(f),
        None => JoinSource::FirstEvent,
    };
    let table = ActivityTable::build(&events, grid, scheme, join)?;
    let config = json!({
        "grid_origin": grid.origin().format("%Y-%m").to_string(),
        "grid_frames": grid.frames(),
        "scheme": scheme.name(),
        "join": if first.is_some() { "side_table" } else { "first_event" },
    });
    Ok((table, config))
}

fn profile(settings: &Settings, a: ProfileArgs, outputs: &mut Outputs) -> CliResult<serde_json::Value> {
    let (table, mut config) = build_table(settings, &a.table, outputs)?;
    let rows = population_dynamics(&table);
    outputs.write_with("dynamics.csv", |b| write_dynamics_csv(b, &table, &rows))?;
    if a.svg {
        let chart = Chart {
            kind: ChartKind::Line,
            title: "Active and new users per frame".into(),
            x_label: "frame".into(),
            y_label: "users".into(),
            x: rows.iter().map(|r| r.frame.to_string()).collect(),
            series: vec![
                ("active".into(), rows.iter().map(|r| Some(r.active as f64)).collect()),
                ("new".into(), rows.iter().map(|r| Some(r.new as f64)).collect()),
            ],
        };
        outputs.add("dynamics.svg", chart.render().into_bytes());
    }
    if let Some(path) = &a.labels {
        let labels = load_labels(path, outputs)?;
        let trait_ = settings.trait_(&a.trait_)?;
        let shares = class_feature_shares(&table, &labels, trait_, a.share_mode.into())?;
        let temporal = class_temporal_means(&table, &labels, trait_, a.share_mode.into())?;
        outputs.write_with("shares.csv", |b| write_shares_csv(b, &shares))?;
        outputs.write_with("temporal_shares.csv", |b| write_temporal_csv(b, &temporal))?;
        if a.svg {
            let cats: Vec<String> = table.scheme().categories().iter().map(|c| c.name().to_string()).collect();
            let mut classes: Vec<&str> = shares.iter().map(|s| s.class).collect();
            classes.dedup();
            let series = classes
                .iter()
                .map(|class| {
                    let v = cats
                        .iter()
                        .map(|c| shares.iter().find(|s| s.class == *class && s.category == *c).map(|s| s.mean_share))
                        .collect();
                    (class.to_string(), v)
                })
                .collect();
            let chart = Chart {
                kind: ChartKind::Bar,
                title: format!("Mean activity share by {trait_}"),
                x_label: "category".into(),
                y_label: "share".into(),
                x: cats,
                series,
            };
            outputs.add("shares.svg", chart.render().into_bytes());
        }
        config["trait"] = json!(trait_.name());
        config["share_mode"] = json!(a.share_mode);
    }
    Ok(config)
}

fn featurize(settings: &Settings, a: FeaturizeArgs, outputs: &mut Outputs) -> CliResult<serde_json::Value> {
    let (table, mut config) = build_table(settings, &a.table, outputs)?;
    let frames = table.grid().frames();
    let horizon = a.horizon.unwrap_or(frames);
    if horizon == 0 || horizon > frames {
        return Err(CliError::usage(format!("--horizon must lie in 1..={frames}, got {horizon}")));
    }
    outputs.write_with("features.bin", |b| encode_activity(b, &table))?;
    let ds = table.dataset(horizon, a.encoding.into());
    outputs.write_with("features.csv", |b| ds.write_csv(b))?;
    config["horizon"] = json!(horizon);
    config["encoding"] = json!(a.encoding);
    Ok(config)
}

fn train_spec(settings: &Settings, s: &SpecArgs, seed: u64) -> CliResult<(TrainSpec, Encoding)> {
    let defaults = TrainSpec::default();
    let spec = TrainSpec {
        n_repeats: s.repeats.or(settings.repeats).unwrap_or(defaults.n_repeats),
        cv_folds: s.folds.or(settings.folds).unwrap_or(defaults.cv_folds),
        penalty: s.penalty.map(Into::into).unwrap_or(defaults.penalty),
        selection: s.selection.map(Into::into).unwrap_or(defaults.selection),
        seed,
        ..defaults
    };
    spec.validate()?;
    Ok((spec, s.encoding.map(Into::into).unwrap_or_default()))
}

fn encoding_name(e: Encoding) -> &'static str {
    match e {
        Encoding::Incremental => "incremental",
        Encoding::Cumulative => "cumulative",
    }
}

fn require_frames(series: &EvalSeries, what: &str) -> CliResult<()> {
    if series.frames.iter().all(|f| f.stats.is_none()) {
        return Err(Error::DegeneratePrior(format!("no frame of the {what} evaluation could be scored")).into());
    }
    Ok(())
}

fn train_eval(settings: &Settings, a: TrainArgs, seed: u64, outputs: &mut Outputs) -> CliResult<serde_json::Value> {
    let trait_ = settings.trait_(&a.target.trait_)?;
    let class = settings.class(&a.target.class, trait_, true)?.expect("required");
    let (spec, encoding) = train_spec(settings, &a.spec, seed)?;
    let table = load_activity(&a.target.features, outputs)?;
    let labels = load_labels(&a.target.labels, outputs)?;
    let series = table.series(encoding);
    let eval = repeated_eval(&series, &labels, trait_, class, &spec)?;
    require_frames(&eval, "per-frame")?;
    outputs.write_with("eval.csv", |b| write_eval_csv(b, &eval))?;
    outputs.write_with("repeats.csv", |b| write_repeats_csv(b, &eval))?;

    let models = fit_frame_models(&series, &labels, trait_, class, &spec)?;
    for (h, model) in &models {
        let metadata: BTreeMap<String, String> = [
            ("trait", trait_.name().to_string()),
            ("class", class.to_string()),
            ("frame", h.to_string()),
            ("seed", seed.to_string()),
            ("encoding", encoding_name(encoding).to_string()),
        ]
        .into_iter()
        .map(|(k, v)| (k.to_string(), v))
        .collect();
        let dump = ModelDump { model: model.clone(), spec_hash: spec.hash(), metadata };
        outputs.write_with(format!("models/frame_{h:02}.model"), |b| write_model_dump(b, &dump))?;
    }

    // first against last scored frame, paired by repeat
    let scored: Vec<usize> = eval.frames.iter().filter(|f| f.stats.is_some()).map(|f| f.frame).collect();
    let (first, last) = (scored[0], scored[scored.len() - 1]);
    let ttest = match (eval.repeat_aucs(first), eval.repeat_aucs(last)) {
        (Some(b), Some(a)) if first != last => paired_t_test(&b, &a).ok(),
        _ => None,
    };
    outputs.json(
        "summary.json",
        &json!({
            "first_frame": first,
            "last_frame": last,
            "mean_auc_first": eval.frame(first).map(|s| s.mean_auc),
            "mean_auc_last": eval.frame(last).map(|s| s.mean_auc),
            "t_test": ttest.map(|t| json!({"t": t.t, "df": t.df, "mean_diff": t.mean_diff, "p_value": t.p_value})),
            "models": models.len(),
        }),
    )?;
    Ok(json!({ "trait": trait_.name(), "class": class, "encoding": encoding_name(encoding), "spec": spec }))
}

fn quantizer(settings: &Settings, q: &QuantArgs) -> CliResult<Quantizer> {
    let quant = Quantizer { bins: q.bins.or(settings.bins).unwrap_or(3), strategy: q.strategy.into(), zero_bin: !q.no_zero_bin };
    quant.validate()?;
    Ok(quant)
}

fn infodyn(settings: &Settings, a: InfodynArgs, outputs: &mut Outputs) -> CliResult<serde_json::Value> {
    let trait_ = settings.trait_(&a.trait_)?;
    let class = settings.class(&a.class, trait_, false)?;
    let quant = quantizer(settings, &a.quant)?;
    let table = load_activity(&a.features, outputs)?;
    let labels = load_labels(&a.labels, outputs)?;
    let users: Vec<_> = table.users().iter().filter(|u| labels.get(&u.user, trait_).is_some()).collect();
    let vocab = trait_.vocabulary();
    let y: Vec<u32> = users
        .iter()
        .map(|u| {
            let c = trait_.canonical_class(labels.get(&u.user, trait_).expect("filtered")).expect("labels are canonical");
            match class {
                Some(target) => u32::from(c == target),
                None => vocab.iter().position(|v| *v == c).expect("in vocabulary") as u32,
            }
        })
        .collect();
    if y.windows(2).all(|w| w[0] == w[1]) {
        return Err(Error::DegeneratePrior(format!("{} labeled users share one {trait_} value", y.len())).into());
    }
    let opts = TransferOptions { window: a.window, miller_madow: a.miller_madow };
    let mut features = Vec::new();
    let mut series = Vec::new();
    for cat in table.scheme().categories() {
        let symbols = category_symbols(&table, &users, cat, &quant)?;
        series.push((cat.name().to_string(), information_transfer_series(&y, &symbols, &opts)));
        features.push((cat.name().to_string(), symbols));
    }
    let ranking = rank_features_by_residual_entropy(&y, &features, table.grid().frames());
    outputs.write_with("transfer.csv", |b| write_transfer_csv(b, &series))?;
    outputs.write_with("ranking.csv", |b| write_ranking_csv(b, &ranking))?;
    outputs.json(
        "summary.json",
        &json!({
            "n": y.len(),
            "target_entropy_bits": series[0].1.target_entropy,
            "total_transfer_bits": series.iter().map(|(n, s)| (n.clone(), s.total_transfer())).collect::<BTreeMap<_, _>>(),
        }),
    )?;
    Ok(json!({
        "trait": trait_.name(),
        "class": class,
        "quantizer": quant,
        "window": a.window,
        "miller_madow": a.miller_madow,
    }))
}

fn cohort_eval(settings: &Settings, a: CohortArgs, seed: u64, outputs: &mut Outputs) -> CliResult<serde_json::Value> {
    let trait_ = settings.trait_(&a.target.trait_)?;
    let class = settings.class(&a.target.class, trait_, true)?.expect("required");
    let (spec, encoding) = train_spec(settings, &a.spec, seed)?;
    let quant = quantizer(settings, &a.quant)?;
    let table = load_activity(&a.target.features, outputs)?;
    let labels = load_labels(&a.target.labels, outputs)?;
    let frames = table.grid().frames();
    let cutoff_frame = a.cutoff_frame.or(settings.cutoff_frame).unwrap_or(5);
    if cutoff_frame < 2 || cutoff_frame > frames {
        return Err(CliError::usage(format!("--cutoff-frame must lie in 2..={frames}, got {cutoff_frame}")));
    }
    let cutoff = cutoff_frame - 1;

    let cmp = compare_ne_fp(&table, &labels, trait_, class, &spec, encoding)?;
    require_frames(&cmp.new_entry, "New Entry")?;
    outputs.write_with("ne_fp.csv", |b| write_gain_csv(b, &cmp))?;
    outputs.write_with("ne_eval.csv", |b| write_eval_csv(b, &cmp.new_entry))?;
    outputs.write_with("fp_eval.csv", |b| write_eval_csv(b, &cmp.fixed_population))?;

    let fp = select_cohort(&table, CohortKind::FixedPopulation)?;
    let mut summary = json!({
        "cutoff_frame": cutoff_frame,
        "fixed_population_size": fp.len(),
        "new_entry_size": table.users().len(),
        "pearson_ne_fp": cmp.pearson,
        "gain": cmp.gain.iter().map(|(f, g)| json!({"frame": f, "gain": g})).collect::<Vec<_>>(),
    });
    let mut members = vec![fp];
    match exited_eval(&table, &labels, trait_, class, cutoff, &spec, encoding, &quant) {
        Ok(ex) => {
            outputs.write_with("exited_eval.csv", |b| write_eval_csv(b, &ex.series))?;
            outputs.write_with("exited_transfer.csv", |b| write_transfer_csv(b, &ex.transfer))?;
            summary["exited"] = json!({ "cohort_size": ex.cohort_size, "n_test": ex.n_test });
            members.push(select_cohort(&table, CohortKind::Exited { cutoff })?);
        }
        Err(e) if e.is_degenerate() => {
            log::warn!("exited analysis skipped: {e}");
            summary["exited"] = json!({ "skipped": e.to_string() });
        }
        Err(e) => return Err(e.into()),
    }
    let refs: Vec<_> = members.iter().collect();
    outputs.write_with("cohorts.csv", |b| write_membership_csv(b, &refs))?;

    let coef_features = if a.coef_features.is_empty() {
        table.scheme().categories().iter().map(|c| format!("{}_1", c.name())).collect()
    } else {
        a.coef_features.clone()
    };
    let models = fit_frame_models(&table.series(encoding), &labels, trait_, class, &spec)?;
    let coefs = coefficient_trajectories(&models, &coef_features)?;
    outputs.write_with("coefficients.csv", |b| write_coefficients_csv(b, &coefs))?;
    outputs.json("summary.json", &summary)?;
    Ok(json!({
        "trait": trait_.name(),
        "class": class,
        "encoding": encoding_name(encoding),
        "cutoff_frame": cutoff_frame,
        "spec": spec,
        "quantizer": quant,
        "coef_features": coef_features,
    }))
}

fn synth(settings: &Settings, a: SynthArgs, seed: Option<u64>, outputs: &mut Outputs) -> CliResult<(u64, serde_json::Value)> {
    let mut cfg: SynthConfig = match reference_config(&a.config) {
        Some(cfg) => cfg,
        None => {
            let path = Path::new(&a.config);
            if !path.exists() {
                return Err(CliError::usage(format!("{:?} is neither a reference config nor a file", a.config)));
            }
            let bytes = input(path, "config", outputs)?;
            serde_json::from_slice(&bytes).map_err(|e| CliError::input("schema", format!("{}: {e}", path.display())))?
        }
    };
    if let Some(seed) = seed {
        cfg.seed = seed;
    }
    if let Some(n) = a.users {
        cfg.n_users = n;
    }
    if let Some(f) = settings.grid_frames.filter(|f| *f != cfg.frames) {
        log::warn!("ignoring grid-frames = {f} from settings; the synth config fixes {} frames", cfg.frames);
    }
    let out = generate(&cfg)?;
    outputs.write_with("events.csv", |b| write_event_log(b, &out.events))?;
    outputs.write_with("labels.csv", |b| write_trait_labels(b, &out.labels))?;
    outputs.write_with("truth.csv", |b| write_truth_csv(b, &out.truth))?;
    outputs.json("config.json", &cfg)?;
    let config = serde_json::to_value(&cfg).expect("config serializes");
    Ok((cfg.seed, config))
}

fn report(a: ReportArgs, out: &Path, outputs: &mut Outputs) -> CliResult<serde_json::Value> {
    let bytes = input(&a.input, "csv", outputs)?;
    let bad = |m: String| CliError::input("schema", format!("{}: {m}", a.input.display()));
    let mut rdr = csv::Reader::from_reader(&bytes[..]);
    let headers = rdr.headers().map_err(|e| bad(e.to_string()))?.clone();
    let col = |name: &str| headers.iter().position(|h| h == name).ok_or_else(|| bad(format!("no column {name:?}")));
    let xi = col(&a.x)?;
    let yi: Vec<usize> = a.y.iter().map(|y| col(y)).collect::<CliResult<_>>()?;
    let gi = a.group.as_deref().map(col).transpose()?;
    let filters: Vec<(usize, &str)> = a.filter.iter().map(|(k, v)| Ok((col(k)?, v.as_str()))).collect::<CliResult<_>>()?;

    let mut x: Vec<String> = Vec::new();
    // (series name) -> x label -> value
    let mut series: Vec<(String, BTreeMap<String, f64>)> = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| bad(e.to_string()))?;
        if filters.iter().any(|(i, v)| &rec[*i] != *v) {
            continue;
        }
        let xv = rec[xi].to_string();
        if !x.contains(&xv) {
            x.push(xv.clone());
        }
        for (k, &i) in yi.iter().enumerate() {
            let name = match (gi, yi.len()) {
                (Some(g), 1) => rec[g].to_string(),
                (Some(g), _) => format!("{} {}", &rec[g], a.y[k]),
                (None, _) => a.y[k].clone(),
            };
            let field = rec[i].trim();
            if field.is_empty() {
                continue;
            }
            let v: f64 = field.parse().map_err(|_| bad(format!("non-numeric {:?} in column {:?}", field, a.y[k])))?;
            let pos = match series.iter().position(|s| s.0 == name) {
                Some(p) => p,
                None => {
                    series.push((name, BTreeMap::new()));
                    series.len() - 1
                }
            };
            series[pos].1.insert(xv.clone(), v);
        }
    }
    if x.iter().all(|v| v.parse::<f64>().is_ok()) {
        x.sort_by(|p, q| p.parse::<f64>().unwrap().total_cmp(&q.parse::<f64>().unwrap()));
    }
    let chart = Chart {
        kind: a.kind,
        title: a.title.clone().unwrap_or_else(|| a.y.join(", ")),
        x_label: a.x.clone(),
        y_label: if a.y.len() == 1 { a.y[0].clone() } else { String::new() },
        series: series.into_iter().map(|(n, m)| (n, x.iter().map(|xv| m.get(xv).copied()).collect())).collect(),
        x,
    };
    let stem = a.input.file_stem().and_then(|s| s.to_str()).unwrap_or("chart");
    let name = a.name.clone().unwrap_or_else(|| format!("{stem}.svg"));
    if out.join(&name) == a.input {
        return Err(CliError::usage("the chart would overwrite its input"));
    }
    outputs.add(name, chart.render().into_bytes());
    Ok(json!({
        "x": a.x,
        "y": a.y,
        "group": a.group,
        "where": a.filter,
        "kind": a.kind,
        "title": a.title,
    }))
}


//! Command line front end: loads metric and form documents, runs the
//! curvature / twistor / holonomy / construction pipelines and writes JSON
//! reports.
//!
//! Exit codes: 0 on success, 1 on input or tool errors, 2 when the
//! computation succeeded but the verification verdict is "failed" (a
//! residual exceeded its threshold), so scripts can gate on outcomes.

use clap::{Args, Parser, Subcommand};
use conformal_core::chart::{load_metric_spec, metric_spec_to_json, MetricSpec};
use conformal_core::constructions;
use conformal_core::curvature::CurvatureJets;
use conformal_core::error::Error as CoreError;
use conformal_core::expr::parse_expr_with_names;
use conformal_core::exterior::{FormBasis, FormField};
use conformal_core::holonomy::{self, HolonomyConfig};
use conformal_core::report::Report;
use conformal_core::twistor;
use serde::Deserialize;
use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

pub const EXIT_OK: i32 = 0;
pub const EXIT_INPUT_ERROR: i32 = 1;
pub const EXIT_VERDICT_FAILED: i32 = 2;

#[derive(Parser)]
#[command(
    name = "conformal",
    about = "Conformal curvature, twistor-equation verification and normal conformal holonomy",
    version
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Args, Clone)]
pub struct CommonOpts {
    /// metric document (JSON)
    #[arg(long)]
    pub metric: PathBuf,
    /// number of sample points
    #[arg(long, default_value_t = 50)]
    pub samples: usize,
    /// seed for the deterministic sampler
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// jet order for the metric
    #[arg(long, default_value_t = 4)]
    pub jet_order: usize,
    /// residual threshold for verdicts
    #[arg(long, default_value_t = 1e-6)]
    pub tol: f64,
    /// report output path (stdout when omitted)
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// print per-point rows in the report
    #[arg(long, default_value_t = false)]
    pub verbose: bool,
}

#[derive(Subcommand)]
pub enum Command {
    /// Build a metric document: flat, space-form, pp-wave, product, warped,
    /// cone, ambient
    Construct {
        #[arg(long)]
        kind: String,
        /// timelike count for `flat`
        #[arg(long, default_value_t = 0)]
        r: usize,
        /// spacelike count for `flat`
        #[arg(long, default_value_t = 3)]
        s: usize,
        /// dimension for `space-form`
        #[arg(long, default_value_t = 3)]
        dim: usize,
        /// sectional curvature for `space-form`
        #[arg(long, default_value_t = 1.0, allow_negative_numbers = true)]
        kappa: f64,
        /// profile H for `pp-wave`, in transverse variables x1, x2, ...
        #[arg(long, default_value = "x1^3")]
        profile: String,
        /// transverse dimension for `pp-wave`
        #[arg(long, default_value_t = 2)]
        transverse: usize,
        /// factor documents for product/warped; base for cone/ambient
        #[arg(long)]
        left: Option<PathBuf>,
        #[arg(long)]
        right: Option<PathBuf>,
        #[arg(long)]
        base: Option<PathBuf>,
        /// cone/ambient scaling
        #[arg(long, default_value_t = 1.0, allow_negative_numbers = true)]
        b: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Curvature hierarchy norms per sample point
    Curvature {
        #[command(flatten)]
        common: CommonOpts,
    },
    /// Verify a p-form against the four normal twistor equations
    TwistorCheck {
        #[command(flatten)]
        common: CommonOpts,
        /// form document (JSON)
        #[arg(long)]
        form: PathBuf,
    },
    /// Verify the conformal Killing equation (first twistor equation) alone
    CkCheck {
        #[command(flatten)]
        common: CommonOpts,
        #[arg(long)]
        form: PathBuf,
    },
    /// Verify the nc-Killing function system for a scalar expression
    NcfunctionCheck {
        #[command(flatten)]
        common: CommonOpts,
        /// scalar expression in the chart coordinates
        #[arg(long)]
        function: String,
    },
    /// Curvature integrability conditions and the Bach divergence set
    Integrability {
        #[command(flatten)]
        common: CommonOpts,
        #[arg(long)]
        form: PathBuf,
    },
    /// Estimate the normal conformal holonomy algebra
    Holonomy {
        #[command(flatten)]
        common: CommonOpts,
        #[arg(long, default_value_t = 48)]
        loops: usize,
        #[arg(long, default_value_t = 0.05)]
        radius: f64,
        #[arg(long, default_value_t = 32)]
        steps: usize,
        /// tractor form degrees for the fixed-form search
        #[arg(long, value_delimiter = ',', default_values_t = vec![1usize, 2])]
        degrees: Vec<usize>,
        /// base point (defaults to the sample box center)
        #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
        basepoint: Option<Vec<f64>>,
    },
    /// Lift a special Killing form onto the cone and verify parallelism
    LiftCone {
        #[command(flatten)]
        common: CommonOpts,
        #[arg(long)]
        form: PathBuf,
        #[arg(long, default_value_t = 1.0, allow_negative_numbers = true)]
        b: f64,
        /// write the lifted form document here
        #[arg(long)]
        lifted_out: Option<PathBuf>,
    },
    /// Compare the normal conformal connection with the ambient Levi-Civita
    /// connection of an Einstein base
    AmbientCompare {
        #[command(flatten)]
        common: CommonOpts,
    },
}

#[derive(Deserialize)]
struct FormDoc {
    degree: usize,
    #[serde(default)]
    coefficients: BTreeMap<String, String>,
}

fn load_form(path: &Path, spec: &MetricSpec) -> Result<FormField, CoreError> {
    let text = fs::read_to_string(path)
        .map_err(|e| CoreError::Json(format!("{}: {e}", path.display())))?;
    let doc: FormDoc =
        serde_json::from_str(&text).map_err(|e| CoreError::Json(e.to_string()))?;
    let mut field = FormField::zero(spec.dim, doc.degree as i32);
    let basis = FormBasis::get(spec.dim, doc.degree.min(spec.dim));
    for (key, expr_text) in &doc.coefficients {
        let combo: Vec<u8> = key
            .split(',')
            .map(|tok| {
                tok.trim()
                    .parse::<u8>()
                    .map_err(|_| CoreError::Json(format!("bad index list `{key}`")))
            })
            .collect::<Result<_, _>>()?;
        let combo0: Vec<u8> = combo
            .iter()
            .map(|&v| {
                if v == 0 || v as usize > spec.dim {
                    Err(CoreError::Json(format!(
                        "index {v} out of range in `{key}`"
                    )))
                } else {
                    Ok(v - 1)
                }
            })
            .collect::<Result<_, _>>()?;
        let mut sorted = combo0.clone();
        sorted.sort_unstable();
        if sorted.windows(2).any(|w| w[0] == w[1]) {
            return Err(CoreError::Json(format!("repeated index in `{key}`")));
        }
        let expr = parse_expr_with_names(expr_text, &spec.coords)?;
        field.coeffs[basis.rank_of(&sorted)] = expr;
    }
    Ok(field)
}

fn check_jet_order(order: usize) -> Result<(), CoreError> {
    if !(1..=6).contains(&order) {
        return Err(CoreError::BadSpec(format!(
            "jet order {order} outside the supported range 1..=6"
        )));
    }
    Ok(())
}

fn load_metric(path: &Path) -> Result<MetricSpec, CoreError> {
    let text = fs::read_to_string(path)
        .map_err(|e| CoreError::Json(format!("{}: {e}", path.display())))?;
    load_metric_spec(&text)
}

fn write_out(out: &Option<PathBuf>, contents: &str) -> Result<(), CoreError> {
    match out {
        Some(path) => fs::write(path, contents)
            .map_err(|e| CoreError::Json(format!("{}: {e}", path.display()))),
        None => {
            println!("{contents}");
            Ok(())
        }
    }
}

/// Run the CLI; returns the process exit code.
pub fn execute<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            // clap handles --help/--version through errors with exit code 0
            let code = if e.use_stderr() { EXIT_INPUT_ERROR } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    match run(cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            EXIT_INPUT_ERROR
        }
    }
}

fn run(cmd: Command) -> Result<i32, CoreError> {
    match cmd {
        Command::Construct {
            kind,
            r,
            s,
            dim,
            kappa,
            profile,
            transverse,
            left,
            right,
            base,
            b,
            out,
        } => {
            let spec = match kind.as_str() {
                "flat" => constructions::flat_metric(r, s)?,
                "space-form" => constructions::space_form(kappa, dim)?,
                "pp-wave" => {
                    let h = conformal_core::expr::parse_expr(&profile, transverse)?;
                    constructions::pp_wave(&h, transverse)?
                }
                "product" => {
                    let l = load_metric(left.as_deref().ok_or_else(|| {
                        CoreError::BadSpec("product needs --left".into())
                    })?)?;
                    let rgt = load_metric(right.as_deref().ok_or_else(|| {
                        CoreError::BadSpec("product needs --right".into())
                    })?)?;
                    constructions::product(&l, &rgt)?
                }
                "warped" => {
                    let l = load_metric(left.as_deref().ok_or_else(|| {
                        CoreError::BadSpec("warped needs --left".into())
                    })?)?;
                    let rgt = load_metric(right.as_deref().ok_or_else(|| {
                        CoreError::BadSpec("warped needs --right".into())
                    })?)?;
                    constructions::warped(&l, &rgt)?
                }
                "cone" => {
                    let bs = load_metric(base.as_deref().ok_or_else(|| {
                        CoreError::BadSpec("cone needs --base".into())
                    })?)?;
                    constructions::cone(&bs, b)?
                }
                "ambient" => {
                    let bs = load_metric(base.as_deref().ok_or_else(|| {
                        CoreError::BadSpec("ambient needs --base".into())
                    })?)?;
                    constructions::ambient(&bs, b)?
                }
                other => {
                    return Err(CoreError::BadSpec(format!(
                        "unknown construction kind `{other}`"
                    )))
                }
            };
            write_out(&out, &metric_spec_to_json(&spec))?;
            Ok(EXIT_OK)
        }

        Command::Curvature { common } => {
            check_jet_order(common.jet_order)?;
            let spec = load_metric(&common.metric)?;
            let samples = spec.sample_points(common.samples, common.seed);
            let mut report = Report::new("curvature");
            config_common(&mut report, &spec, &common);
            let mut max_w = 0.0f64;
            let mut max_c = 0.0f64;
            let mut max_b = 0.0f64;
            let mut scal_range = (f64::INFINITY, f64::NEG_INFINITY);
            for pt in &samples {
                let cp = spec.metric_at(pt, common.jet_order)?;
                let cj = CurvatureJets::new(&cp)?;
                let frame = conformal_core::chart::orthonormal_coframe(&cp)?;
                let scal = cj.scal.value();
                let w = cj.weyl()?.values().frame_norm(&frame.cols);
                let c = cj.cotton()?.values().frame_norm(&frame.cols);
                let bch = cj.bach()?.values().frame_norm(&frame.cols);
                max_w = max_w.max(w);
                max_c = max_c.max(c);
                max_b = max_b.max(bch);
                scal_range.0 = scal_range.0.min(scal);
                scal_range.1 = scal_range.1.max(scal);
                report.push_point(serde_json::json!({
                    "point": pt,
                    "scal": scal,
                    "weyl_norm": w,
                    "cotton_norm": c,
                    "bach_norm": bch,
                }));
            }
            report.aggregate("max_weyl_norm", max_w);
            report.aggregate("max_cotton_norm", max_c);
            report.aggregate("max_bach_norm", max_b);
            report.aggregate("scal_min", scal_range.0);
            report.aggregate("scal_max", scal_range.1);
            report.verdict = "computed".into();
            write_out(&common.out, &report.to_json())?;
            Ok(EXIT_OK)
        }

        Command::TwistorCheck { common, form } => {
            check_jet_order(common.jet_order)?;
            let spec = load_metric(&common.metric)?;
            let field = load_form(&form, &spec)?;
            let samples = spec.sample_points(common.samples, common.seed);
            let res = twistor::nc_residuals(
                &field,
                &spec,
                &samples,
                common.jet_order,
                twistor::FIELD_ORDER,
            )?;
            let verdict = twistor::verdict(&res, common.tol);
            let mut report = Report::new("twistor-check");
            config_common(&mut report, &spec, &common);
            report.config_entry("form", form.display().to_string());
            report.config_entry("degree", field.degree);
            if common.verbose {
                for pr in &res.per_point {
                    report.push_point(pr);
                }
            }
            report.aggregate("max", res.max);
            report.aggregate("mean", res.mean);
            report.verdict = verdict.to_string();
            write_out(&common.out, &report.to_json())?;
            Ok(if verdict == "normal" {
                EXIT_OK
            } else {
                EXIT_VERDICT_FAILED
            })
        }

        Command::CkCheck { common, form } => {
            let spec = load_metric(&common.metric)?;
            let field = load_form(&form, &spec)?;
            let samples = spec.sample_points(common.samples, common.seed);
            let res = twistor::ck_residual(
                &field,
                &spec,
                &samples,
                common.jet_order,
                twistor::FIELD_ORDER,
            )?;
            let pass = res < common.tol;
            let mut report = Report::new("ck-check");
            config_common(&mut report, &spec, &common);
            report.config_entry("form", form.display().to_string());
            report.aggregate("gtw1_max", res);
            report.verdict = if pass { "conformal-killing" } else { "failed" }.into();
            write_out(&common.out, &report.to_json())?;
            Ok(if pass { EXIT_OK } else { EXIT_VERDICT_FAILED })
        }

        Command::NcfunctionCheck { common, function } => {
            let spec = load_metric(&common.metric)?;
            let f = parse_expr_with_names(&function, &spec.coords)?;
            let samples = spec.sample_points(common.samples, common.seed);
            let (r1, r2) =
                twistor::ncfunction_residuals(&f, &spec, &samples, common.jet_order)?;
            let pass = r1 < common.tol && r2 < common.tol;
            let mut report = Report::new("ncfunction-check");
            config_common(&mut report, &spec, &common);
            report.config_entry("function", function);
            report.aggregate("hessian_residual", r1);
            report.aggregate("gradient_residual", r2);
            report.verdict = if pass { "nc-killing" } else { "failed" }.into();
            write_out(&common.out, &report.to_json())?;
            Ok(if pass { EXIT_OK } else { EXIT_VERDICT_FAILED })
        }

        Command::Integrability { common, form } => {
            let spec = load_metric(&common.metric)?;
            let field = load_form(&form, &spec)?;
            let samples = spec.sample_points(common.samples, common.seed);
            let rep = twistor::integrability_residuals(
                &field,
                &spec,
                &samples,
                common.jet_order.max(4),
                twistor::FIELD_ORDER,
            )?;
            let worst = rep
                .g17
                .max(rep.g18)
                .max(rep.g19)
                .max(rep.g20)
                .max(rep.bach.iter().copied().fold(0.0, f64::max));
            let pass = worst < common.tol;
            let mut report = Report::new("integrability");
            config_common(&mut report, &spec, &common);
            report.config_entry("form", form.display().to_string());
            report.aggregate("g17", rep.g17);
            report.aggregate("g18", rep.g18);
            report.aggregate("g19", rep.g19);
            report.aggregate("g20", rep.g20);
            report.aggregate("bach_relations", rep.bach);
            report.verdict = if pass { "integrable" } else { "failed" }.into();
            write_out(&common.out, &report.to_json())?;
            Ok(if pass { EXIT_OK } else { EXIT_VERDICT_FAILED })
        }

        Command::Holonomy {
            common,
            loops,
            radius,
            steps,
            degrees,
            basepoint,
        } => {
            let spec = load_metric(&common.metric)?;
            let base = basepoint.unwrap_or_else(|| spec.sample_center.clone());
            let cfg = HolonomyConfig {
                loops,
                steps_per_segment: steps,
                radius,
                seed: common.seed,
                curvature_samples: common.samples,
                metric_order: common.jet_order,
            };
            let rep = holonomy::estimate_holonomy(&spec, &base, &cfg)?;
            let rep = holonomy::invariant_structure(rep, &degrees);
            let mut report = Report::new("holonomy");
            config_common(&mut report, &spec, &common);
            report.config_entry("loops", loops);
            report.config_entry("radius", radius);
            report.config_entry("steps", steps);
            report.config_entry("basepoint", &base);
            report.aggregate("rank", rep.rank);
            report.aggregate("singular_values", &rep.singular_values);
            report.aggregate("skew_defect_max", rep.skew_defect_max);
            report.aggregate("fixed_vectors", &rep.fixed_vectors);
            report.aggregate("fixed_vector_space_dim", rep.fixed_vector_space_dim);
            report.aggregate("invariant_subspaces", &rep.invariant_subspaces);
            report.aggregate("fixed_forms", &rep.fixed_forms);
            report.aggregate("provenance", &rep.provenance);
            if common.verbose {
                report.aggregate("basis", &rep.basis);
            }
            report.verdict = rep.classification.clone();
            write_out(&common.out, &report.to_json())?;
            Ok(EXIT_OK)
        }

        Command::LiftCone {
            common,
            form,
            b,
            lifted_out,
        } => {
            let spec = load_metric(&common.metric)?;
            let field = load_form(&form, &spec)?;
            let samples = spec.sample_points(common.samples, common.seed);
            let (sk1, sk2) = constructions::special_killing_residuals(
                &field,
                &spec,
                &samples,
                common.jet_order,
            )?;
            let lifted = constructions::lift_to_cone(&field, &spec, b)?;
            let conespec = constructions::cone(&spec, b)?;
            let cone_samples = conespec.sample_points(common.samples, common.seed);
            let par = constructions::parallel_residual(
                &lifted,
                &conespec,
                &cone_samples,
                common.jet_order.min(3),
            )?;
            let pass = par < common.tol && sk1 < common.tol && sk2 < common.tol;
            let mut report = Report::new("lift-cone");
            config_common(&mut report, &spec, &common);
            report.config_entry("form", form.display().to_string());
            report.config_entry("b", b);
            report.aggregate("special_killing_residuals", [sk1, sk2]);
            report.aggregate("cone_parallel_residual", par);
            report.verdict = if pass { "parallel" } else { "failed" }.into();
            if let Some(path) = lifted_out {
                fs::write(&path, form_to_json(&lifted, &conespec))
                    .map_err(|e| CoreError::Json(format!("{}: {e}", path.display())))?;
            }
            write_out(&common.out, &report.to_json())?;
            Ok(if pass { EXIT_OK } else { EXIT_VERDICT_FAILED })
        }

        Command::AmbientCompare { common } => {
            let spec = load_metric(&common.metric)?;
            let samples = spec.sample_points(common.samples, common.seed);
            let rep = constructions::ambient_compare(&spec, &samples, common.jet_order)?;
            let pass = rep.deviation < common.tol && rep.tractor_rank == rep.ambient_rank;
            let mut report = Report::new("ambient-compare");
            config_common(&mut report, &spec, &common);
            report.aggregate("b", rep.b);
            report.aggregate("scal", rep.scal);
            report.aggregate("connection_deviation", rep.deviation);
            report.aggregate("tractor_rank", rep.tractor_rank);
            report.aggregate("ambient_rank", rep.ambient_rank);
            report.verdict = if pass { "match" } else { "failed" }.into();
            write_out(&common.out, &report.to_json())?;
            Ok(if pass { EXIT_OK } else { EXIT_VERDICT_FAILED })
        }
    }
}

fn config_common(report: &mut Report, spec: &MetricSpec, common: &CommonOpts) {
    report.config_entry("metric", spec.label.clone());
    report.config_entry("dim", spec.dim);
    report.config_entry("signature", [spec.r, spec.s]);
    report.config_entry("samples", common.samples);
    report.config_entry("seed", common.seed);
    report.config_entry("jet_order", common.jet_order);
    report.config_entry("tol", common.tol);
}

fn form_to_json(field: &FormField, spec: &MetricSpec) -> String {
    let basis = FormBasis::get(
        field.n,
        field.degree.clamp(0, field.n as i32) as usize,
    );
    let mut coefficients = BTreeMap::new();
    for (i, e) in field.coeffs.iter().enumerate() {
        if matches!(e, conformal_core::expr::Expr::Num(v) if *v == 0.0) {
            continue;
        }
        let key = basis.combos[i]
            .iter()
            .map(|&v| (v + 1).to_string())
            .collect::<Vec<_>>()
            .join(",");
        coefficients.insert(key, e.to_text(&spec.coords));
    }
    serde_json::to_string_pretty(&serde_json::json!({
        "degree": field.degree,
        "coefficients": coefficients,
    }))
    .expect("form document serializes")
}

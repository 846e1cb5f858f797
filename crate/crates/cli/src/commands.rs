use std::io::Write;
use std::path::Path;

use freelln::family::{family_density, family_moment};
use freelln::limit_law::{fractional_moment, limit_cdf, log_moments, log_variance, nfold_log_variance};
use freelln::rmt::{lln_convergence_report, product_spectra, report_json, write_spectra_csv};
use freelln::{FamilyParams, LimitLaw, McConfig, McSource, Measure, STransform};

use crate::table::Table;
use crate::{verify, Command, Failure, FamilyArgs, Format, GridArgs, OutputArgs, SourceArgs};

/// A measure named on the command line.
enum Source {
    Family(FamilyParams),
    Measure(Measure),
}

impl Source {
    fn measure(&self) -> Measure {
        match self {
            Source::Family(p) => Measure::family(*p),
            Source::Measure(m) => m.clone(),
        }
    }
}

fn resolve(args: &SourceArgs) -> Result<Source, Failure> {
    match (&args.measure, args.alpha, args.beta) {
        (Some(path), None, None) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| Failure::Usage(format!("cannot read {}: {e}", path.display())))?;
            Ok(Source::Measure(Measure::from_json(&text)?))
        }
        (None, Some(a), Some(b)) => Ok(Source::Family(FamilyParams::new(a, b)?)),
        _ => Err(Failure::Usage("give either --alpha and --beta, or --measure".into())),
    }
}

fn grid(args: &GridArgs, default_lo: f64, default_hi: f64) -> Result<Vec<f64>, Failure> {
    let lo = args.xmin.unwrap_or(default_lo);
    let hi = args.xmax.unwrap_or(default_hi);
    if !(lo.is_finite() && hi.is_finite() && lo < hi) {
        return Err(Failure::Usage(format!("need finite --xmin < --xmax, got {lo} and {hi}")));
    }
    if args.points < 2 {
        return Err(Failure::Usage("--points must be at least 2".into()));
    }
    let last = (args.points - 1) as f64;
    Ok((0..args.points).map(|k| lo + (hi - lo) * k as f64 / last).collect())
}

fn emit(table: &Table, output: &OutputArgs) -> Result<(), Failure> {
    let mut w = crate::table::open_output(output.out.as_deref())?;
    match output.format.unwrap_or(Format::Csv) {
        Format::Csv => table.write_csv(&mut w)?,
        Format::Json => writeln!(w, "{}", serde_json::to_string_pretty(&table.to_json()).expect("json"))?,
    }
    w.flush()?;
    Ok(())
}

pub fn run(command: Command) -> Result<(), Failure> {
    match command {
        Command::Density { family, grid, output } => density(&family, &grid, &output),
        Command::CdfLimit { source, grid, output } => cdf_limit(&source, &grid, &output),
        Command::Transforms { source, points, output } => transforms(&source, points, &output),
        Command::Moments { source, gamma, output } => moments(&source, gamma, &output),
        Command::Logstats { source, n, output } => logstats(&source, n, &output),
        Command::McProduct { source, n, dim, trials, seed, output } => {
            mc_product(&source, n, dim, trials, seed, &output)
        }
        Command::Verify { suite, seed, output } => verify::run(suite, seed, &output),
    }
}

fn density(family: &FamilyArgs, g: &GridArgs, output: &OutputArgs) -> Result<(), Failure> {
    let p = FamilyParams::new(family.alpha, family.beta)?;
    if p.is_identity() {
        return Err(Failure::Domain("μ(0, 0) is a point mass and has no density".into()));
    }
    let xs = grid(g, 0.01, 10.0)?;
    if xs[0] < 0.0 {
        return Err(Failure::Domain(format!("density needs x >= 0, got --xmin {}", xs[0])));
    }
    let mut t = Table::new(vec!["x", "density"]);
    for x in xs {
        // the density is infinite or undefined at 0 for some parameters
        let f = if x == 0.0 { f64::NAN } else { family_density(p, x)? };
        t.push(vec![x, f]);
    }
    emit(&t, output)
}

fn cdf_limit(source: &SourceArgs, g: &GridArgs, output: &OutputArgs) -> Result<(), Failure> {
    let ll = LimitLaw::from_measure(&resolve(source)?.measure());
    let delta = ll.atom_at_zero();
    let (lo, hi) = (ll.quantile(delta + (1.0 - delta) * 1e-3)?, ll.quantile(delta + (1.0 - delta) * 0.999)?);
    let (lo, hi) = if lo < hi { (lo, hi) } else { (0.5 * lo, 1.5 * hi) };
    let mut t = Table::new(vec!["x", "cdf"]);
    for x in grid(g, lo, hi)? {
        t.push(vec![x, if x < 0.0 { 0.0 } else { limit_cdf(&ll, x)? }]);
    }
    emit(&t, output)
}

fn transforms(source: &SourceArgs, points: usize, output: &OutputArgs) -> Result<(), Failure> {
    if points < 1 {
        return Err(Failure::Usage("--points must be at least 1".into()));
    }
    let st = STransform::new(&resolve(source)?.measure());
    let span = 1.0 - st.delta();
    let mut t = Table::new(vec!["z", "chi", "s"]);
    for k in 0..points {
        let z = -span * (1.0 - (k as f64 + 0.5) / points as f64);
        let s = st.eval(z)?;
        // χ(z) = z S(z) / (1 + z)
        t.push(vec![z, z * s / (1.0 + z), s]);
    }
    emit(&t, output)
}

fn moments(source: &SourceArgs, gamma: f64, output: &OutputArgs) -> Result<(), Failure> {
    if !gamma.is_finite() {
        return Err(Failure::Usage(format!("--gamma must be finite, got {gamma}")));
    }
    let value = match resolve(source)? {
        Source::Family(p) => family_moment(p, gamma),
        Source::Measure(m) => fractional_moment(&m, gamma)?,
    };
    let mut t = Table::new(vec!["gamma", "moment"]);
    t.push(vec![gamma, value]);
    emit(&t, output)
}

fn logstats(source: &SourceArgs, n: Option<u32>, output: &OutputArgs) -> Result<(), Failure> {
    let m = resolve(source)?.measure();
    let lm = log_moments(&m)?;
    let (var_mu, var_nu) = log_variance(&m)?;
    let mut cols = vec!["mean_ln", "rho", "var_ln", "var_ln_limit"];
    let mut row = vec![lm.mean_ln, lm.rho, var_mu, var_nu];
    if let Some(n) = n {
        if n == 0 {
            return Err(Failure::Usage("--n must be positive".into()));
        }
        cols.extend(["n", "var_ln_nfold"]);
        row.extend([n as f64, nfold_log_variance(&m, n)?]);
    }
    let mut t = Table::new(cols);
    t.push(row);
    emit(&t, output)
}

fn mc_product(
    source: &SourceArgs,
    n: u32,
    dim: usize,
    trials: usize,
    seed: u64,
    output: &OutputArgs,
) -> Result<(), Failure> {
    let src = resolve(source)?;
    let m = src.measure();
    let mc_source = match src {
        Source::Family(p) => McSource::Family(p),
        Source::Measure(m) => McSource::Measure(m),
    };
    let cfg = McConfig::new(mc_source, dim, n, trials, seed)?;
    let mut w = crate::table::open_output(output.out.as_deref())?;
    match output.format.unwrap_or(Format::Csv) {
        Format::Csv => write_spectra_csv(&mut w, &product_spectra(&cfg)?)?,
        Format::Json => {
            let ll = LimitLaw::from_measure(&m);
            let reference = |x: f64| limit_cdf(&ll, x).unwrap_or(f64::NAN);
            writeln!(w, "{}", report_json(&lln_convergence_report(&cfg, &reference)?))?;
        }
    }
    w.flush()?;
    Ok(())
}

pub fn write_json(value: &serde_json::Value, out: Option<&Path>) -> Result<(), Failure> {
    let mut w = crate::table::open_output(out)?;
    writeln!(w, "{}", serde_json::to_string_pretty(value).expect("json"))?;
    w.flush()?;
    Ok(())
}

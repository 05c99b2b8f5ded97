use std::fmt::Write as _;
use std::fs;
use std::io::{self, Write as _};
use std::path::{Path, PathBuf};

use super::{ExperimentConfig, ExperimentOutcome, HarnessError, RegretTrace};

/// Longest horizon written round by round; longer runs are strided.
pub const MAX_LOGGED_ROWS: usize = 100_000;

/// Writes `contents` next to `path` and renames it into place.
fn write_atomic(path: &Path, contents: &str) -> io::Result<()> {
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".tmp");
    let tmp = PathBuf::from(tmp);
    {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(contents.as_bytes())?;
        f.sync_all()?;
    }
    fs::rename(&tmp, path)
}

fn logged_rounds(rounds: usize) -> Vec<usize> {
    let stride = rounds.div_ceil(MAX_LOGGED_ROWS).max(1);
    let mut out: Vec<usize> = (1..=rounds).step_by(stride).collect();
    if out.last() != Some(&rounds) {
        out.push(rounds);
    }
    out
}

/// CSV with one row per logged round: per-trial cumulative regret, mean,
/// standard deviation and the 3σ band.
pub fn regret_csv(trace: &RegretTrace) -> String {
    let mut s = String::from("round");
    for i in 0..trace.num_trials() {
        let _ = write!(s, ",trial_{i}");
    }
    s.push_str(",mean,std,lo3,hi3\n");
    for t in logged_rounds(trace.rounds()) {
        let i = t - 1;
        let _ = write!(s, "{t}");
        for tr in trace.trials() {
            let _ = write!(s, ",{}", tr[i]);
        }
        let _ = writeln!(
            s,
            ",{},{},{},{}",
            trace.mean()[i],
            trace.std()[i],
            trace.lo3(i),
            trace.hi3(i)
        );
    }
    s
}

/// Parses a file written by [`regret_csv`] into `(rounds, trial curves)`.
pub fn read_regret_csv(text: &str) -> Result<(Vec<usize>, Vec<Vec<f64>>), HarnessError> {
    let bad = |line: usize, what: &str| HarnessError::Config(format!("regret csv line {line}: {what}"));
    let mut lines = text.lines();
    let header: Vec<&str> = lines.next().ok_or_else(|| bad(1, "empty"))?.split(',').collect();
    let num_trials = header.iter().filter(|h| h.starts_with("trial_")).count();
    if header.first() != Some(&"round") || header.len() != num_trials + 5 {
        return Err(bad(1, "unexpected header"));
    }
    let mut rounds = Vec::new();
    let mut trials = vec![Vec::new(); num_trials];
    for (n, line) in lines.enumerate() {
        let cells: Vec<&str> = line.split(',').collect();
        if cells.len() != header.len() {
            return Err(bad(n + 2, "wrong number of fields"));
        }
        rounds.push(cells[0].parse().map_err(|_| bad(n + 2, "bad round"))?);
        for (k, tr) in trials.iter_mut().enumerate() {
            tr.push(cells[k + 1].parse().map_err(|_| bad(n + 2, "bad value"))?);
        }
    }
    Ok((rounds, trials))
}

/// Key-value summary of the instance, the run and the config.
pub fn format_stats(config: &ExperimentConfig, outcome: &ExperimentOutcome) -> String {
    let st = &outcome.stats;
    let mut s = String::new();
    let mu: Vec<String> = outcome.mu.values().iter().map(f64::to_string).collect();
    let _ = writeln!(s, "mu={}", mu.join(","));
    let _ = writeln!(s, "rho={}", st.rho);
    let _ = writeln!(s, "delta_min={}", st.delta_min);
    let _ = writeln!(s, "delta_max={}", st.delta_max);
    let _ = writeln!(s, "member={}", st.member);
    let _ = writeln!(s, "margin={}", st.margin);
    match st.model_gap {
        Some(g) => _ = writeln!(s, "model_gap={g}"),
        None => _ = writeln!(s, "model_gap=none"),
    }
    let _ = writeln!(s, "boundary_warning={}", st.boundary_warning);
    let _ = writeln!(s, "final_mean_regret={}", outcome.trace.final_mean());
    let _ = writeln!(s, "final_std_regret={}", outcome.trace.std().last().copied().unwrap_or(0.0));
    let n = outcome.trials.len().max(1) as f64;
    let sub = outcome.trials.iter().map(|t| t.suboptimal_plays as f64).sum::<f64>() / n;
    let _ = writeln!(s, "mean_suboptimal_plays={sub}");
    let exploit = outcome.trials.iter().map(|t| t.exploit_regret).sum::<f64>() / n;
    let _ = writeln!(s, "mean_exploit_regret={exploit}");
    let _ = writeln!(s, "algorithm={}", config.algorithm.name());
    if let Ok(j) = serde_json::to_string(&config.algorithm) {
        let _ = writeln!(s, "algorithm_config={j}");
    }
    let _ = writeln!(s, "horizon={}", config.horizon);
    let _ = writeln!(s, "trials={}", config.trials);
    let _ = writeln!(s, "base_seed={}", config.base_seed);
    let _ = writeln!(s, "noise_sigma={}", config.noise_sigma);
    if let Some(l) = config.membership_ridge {
        let _ = writeln!(s, "membership_ridge={l}");
    }
    s
}

/// Mean cumulative regret with its 3σ band as a standalone SVG.
pub fn regret_svg(trace: &RegretTrace) -> String {
    const W: f64 = 640.0;
    const H: f64 = 400.0;
    const PAD: f64 = 40.0;
    let rounds = logged_rounds(trace.rounds());
    let ymax = rounds
        .iter()
        .map(|&t| trace.hi3(t - 1))
        .fold(0.0_f64, f64::max)
        .max(1e-12);
    let ymin = rounds.iter().map(|&t| trace.lo3(t - 1)).fold(0.0_f64, f64::min);
    let tmax = trace.rounds() as f64;
    let px = |t: usize| PAD + (W - 2.0 * PAD) * (t as f64 - 1.0) / (tmax - 1.0).max(1.0);
    let py = |y: f64| H - PAD - (H - 2.0 * PAD) * (y - ymin) / (ymax - ymin);

    let mut band = String::new();
    for &t in &rounds {
        let _ = write!(band, "{:.2},{:.2} ", px(t), py(trace.hi3(t - 1)));
    }
    for &t in rounds.iter().rev() {
        let _ = write!(band, "{:.2},{:.2} ", px(t), py(trace.lo3(t - 1)));
    }
    let mut line = String::new();
    for &t in &rounds {
        let _ = write!(line, "{:.2},{:.2} ", px(t), py(trace.mean()[t - 1]));
    }
    format!(
        r##"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}">
<rect width="100%" height="100%" fill="white"/>
<line x1="{PAD}" y1="{b}" x2="{r}" y2="{b}" stroke="black"/>
<line x1="{PAD}" y1="{PAD}" x2="{PAD}" y2="{b}" stroke="black"/>
<polygon points="{band}" fill="#4682b4" fill-opacity="0.25" stroke="none"/>
<polyline points="{line}" fill="none" stroke="#1f3a93" stroke-width="1.5"/>
<text x="{PAD}" y="{ty}" font-size="12">cumulative regret (max {ymax:.3}) vs round (T = {tmax})</text>
</svg>
"##,
        b = H - PAD,
        r = W - PAD,
        ty = PAD - 10.0,
    )
}

fn region_points_csv(points: &[super::RegionPoint]) -> String {
    let dim = points.first().map_or(0, |p| p.mu.len());
    let mut s = String::new();
    for k in 0..dim {
        let _ = write!(s, "mu_{k},");
    }
    s.push_str("accepted\n");
    for p in points {
        for v in &p.mu {
            let _ = write!(s, "{v},");
        }
        let _ = writeln!(s, "{}", p.accepted);
    }
    s
}

/// Writes `regret.csv`, `stats.txt`, `regret.svg` and, for sampled
/// instances, `region_points.csv` into `dir`. Returns the written paths.
pub fn emit_outputs(
    dir: &Path,
    config: &ExperimentConfig,
    outcome: &ExperimentOutcome,
) -> Result<Vec<PathBuf>, HarnessError> {
    fs::create_dir_all(dir)?;
    let mut files = vec![
        ("regret.csv", regret_csv(&outcome.trace)),
        ("stats.txt", format_stats(config, outcome)),
        ("regret.svg", regret_svg(&outcome.trace)),
    ];
    if let Some(points) = &outcome.region_points {
        files.push(("region_points.csv", region_points_csv(points)));
    }
    let mut written = Vec::with_capacity(files.len());
    for (name, contents) in files {
        let path = dir.join(name);
        write_atomic(&path, &contents)?;
        written.push(path);
    }
    Ok(written)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn stride_keeps_last_round() {
        assert_eq!(logged_rounds(5), vec![1, 2, 3, 4, 5]);
        let long = logged_rounds(250_001);
        assert_eq!(long[1], 4);
        assert_eq!(*long.last().unwrap(), 250_001);
        assert!(long.len() <= MAX_LOGGED_ROWS + 1);
    }

    #[test]
    fn csv_round_trip() {
        let tr = RegretTrace::from_trials(vec![vec![0.0, 0.1, 0.30000000000000004], vec![1.0, 2.5, 1e-17]])
            .unwrap();
        let (rounds, trials) = read_regret_csv(&regret_csv(&tr)).unwrap();
        assert_eq!(rounds, vec![1, 2, 3]);
        assert_eq!(trials, tr.trials());
    }
}

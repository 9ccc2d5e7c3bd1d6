//! Reward visualization: a self-contained SVG bar chart of per-run cumulative
//! rewards, plus a CSV twin carrying the same numbers for reprocessing.
//!
//! Output is byte-deterministic: coordinates are formatted to fixed
//! precision and nothing depends on locale, time, or map ordering.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::error::PlotError;
use crate::experiment::RunRecord;

const MARGIN_LEFT: f64 = 64.0;
const MARGIN_RIGHT: f64 = 24.0;
const MARGIN_TOP: f64 = 48.0;
const MARGIN_BOTTOM: f64 = 48.0;
const PLOT_HEIGHT: f64 = 280.0;
const GROUP_WIDTH: f64 = 64.0;
const BAR_WIDTH: f64 = 24.0;
const BAR_GAP: f64 = 4.0;
const DEFENDER_FILL: &str = "#2b6cb0";
const ATTACKER_FILL: &str = "#c05621";

/// Render `records` as a grouped bar chart at `out_svg` and write the same
/// values as CSV next to it (same path with a `.csv` extension).
pub fn emit_reward_plot(records: &[RunRecord], out_svg: &Path) -> Result<(), PlotError> {
    if records.is_empty() {
        return Err(PlotError::Empty);
    }
    let svg = render_svg(records)?;
    write_file(out_svg, svg.as_bytes())?;
    let csv_path = out_svg.with_extension("csv");
    write_file(&csv_path, render_csv(records).as_bytes())
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<(), PlotError> {
    fs::write(path, bytes).map_err(|source| PlotError::Io {
        path: path.display().to_string(),
        source,
    })
}

/// CSV twin of the chart: one row per run, reward sums only.
pub fn render_csv(records: &[RunRecord]) -> String {
    let mut out = String::from("run,game,defender_reward_sum,attacker_reward_sum\n");
    for r in records {
        let _ = writeln!(
            out,
            "{},{},{},{}",
            r.run, r.game, r.defender_reward_sum, r.attacker_reward_sum
        );
    }
    out
}

fn render_svg(records: &[RunRecord]) -> Result<String, PlotError> {
    let n = records.len();
    let plot_w = GROUP_WIDTH * n as f64;
    let width = MARGIN_LEFT + plot_w + MARGIN_RIGHT;
    let height = MARGIN_TOP + PLOT_HEIGHT + MARGIN_BOTTOM;

    let mut lo = 0i64;
    let mut hi = 0i64;
    for r in records {
        lo = lo.min(r.defender_reward_sum).min(r.attacker_reward_sum);
        hi = hi.max(r.defender_reward_sum).max(r.attacker_reward_sum);
    }
    let step = nice_step(((hi - lo).max(1) as f64) / 6.0);
    // Snap the range outward to tick multiples so gridlines meet the frame.
    lo = lo.div_euclid(step) * step;
    hi = hi.div_euclid(step) * step + if hi.rem_euclid(step) != 0 { step } else { 0 };
    if hi == lo {
        hi = lo + step;
    }
    let span = (hi - lo) as f64;
    let y_of = |v: f64| MARGIN_TOP + (hi as f64 - v) / span * PLOT_HEIGHT;

    let mut svg = String::new();
    let w = &mut svg;
    let _ = writeln!(
        w,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{width:.0}\" height=\"{height:.0}\" viewBox=\"0 0 {width:.0} {height:.0}\">"
    );
    let _ = writeln!(
        w,
        "  <style>text{{font-family:sans-serif;font-size:12px;fill:#333}}.t{{font-size:14px;font-weight:bold}}</style>"
    );
    let _ = writeln!(
        w,
        "  <rect x=\"0\" y=\"0\" width=\"{width:.0}\" height=\"{height:.0}\" fill=\"#ffffff\"/>"
    );
    let _ = writeln!(
        w,
        "  <text class=\"t\" x=\"{MARGIN_LEFT:.2}\" y=\"24.00\">Cumulative reward per run (game {})</text>",
        records[0].game
    );

    // Horizontal gridlines with tick labels.
    let mut tick = lo;
    while tick <= hi {
        let y = y_of(tick as f64);
        let _ = writeln!(
            w,
            "  <line x1=\"{MARGIN_LEFT:.2}\" y1=\"{y:.2}\" x2=\"{:.2}\" y2=\"{y:.2}\" stroke=\"#ddd\"/>",
            MARGIN_LEFT + plot_w
        );
        let _ = writeln!(
            w,
            "  <text x=\"{:.2}\" y=\"{:.2}\" text-anchor=\"end\">{tick}</text>",
            MARGIN_LEFT - 8.0,
            y + 4.0
        );
        tick += step;
    }

    // Bars, defender then attacker per run, anchored at the zero baseline.
    let zero_y = y_of(0.0);
    let pair_w = 2.0 * BAR_WIDTH + BAR_GAP;
    for (i, r) in records.iter().enumerate() {
        let group_x = MARGIN_LEFT + GROUP_WIDTH * i as f64;
        let def_x = group_x + (GROUP_WIDTH - pair_w) / 2.0;
        let att_x = def_x + BAR_WIDTH + BAR_GAP;
        for (x, v, fill) in [
            (def_x, r.defender_reward_sum, DEFENDER_FILL),
            (att_x, r.attacker_reward_sum, ATTACKER_FILL),
        ] {
            let vy = y_of(v as f64);
            let (top, h) = if vy <= zero_y {
                (vy, zero_y - vy)
            } else {
                (zero_y, vy - zero_y)
            };
            let _ = writeln!(
                w,
                "  <rect x=\"{x:.2}\" y=\"{top:.2}\" width=\"{BAR_WIDTH:.2}\" height=\"{h:.2}\" fill=\"{fill}\"/>"
            );
        }
        let _ = writeln!(
            w,
            "  <text x=\"{:.2}\" y=\"{:.2}\" text-anchor=\"middle\">{}</text>",
            group_x + GROUP_WIDTH / 2.0,
            MARGIN_TOP + PLOT_HEIGHT + 18.0,
            r.run
        );
    }

    // Zero baseline and frame drawn over the bars.
    let _ = writeln!(
        w,
        "  <line x1=\"{MARGIN_LEFT:.2}\" y1=\"{zero_y:.2}\" x2=\"{:.2}\" y2=\"{zero_y:.2}\" stroke=\"#333\"/>",
        MARGIN_LEFT + plot_w
    );
    let _ = writeln!(
        w,
        "  <rect x=\"{MARGIN_LEFT:.2}\" y=\"{MARGIN_TOP:.2}\" width=\"{plot_w:.2}\" height=\"{PLOT_HEIGHT:.2}\" fill=\"none\" stroke=\"#999\"/>"
    );

    // Axis captions and legend.
    let _ = writeln!(
        w,
        "  <text x=\"{:.2}\" y=\"{:.2}\" text-anchor=\"middle\">run</text>",
        MARGIN_LEFT + plot_w / 2.0,
        MARGIN_TOP + PLOT_HEIGHT + 38.0
    );
    let _ = writeln!(
        w,
        "  <text x=\"16.00\" y=\"{:.2}\" text-anchor=\"middle\" transform=\"rotate(-90 16.00 {:.2})\">reward sum</text>",
        MARGIN_TOP + PLOT_HEIGHT / 2.0,
        MARGIN_TOP + PLOT_HEIGHT / 2.0
    );
    let legend_x = MARGIN_LEFT + plot_w - 150.0;
    for (slot, (label, fill)) in [("defender", DEFENDER_FILL), ("attacker", ATTACKER_FILL)]
        .into_iter()
        .enumerate()
    {
        let y = 14.0 + 16.0 * slot as f64;
        let _ = writeln!(
            w,
            "  <rect x=\"{legend_x:.2}\" y=\"{y:.2}\" width=\"12.00\" height=\"12.00\" fill=\"{fill}\"/>"
        );
        let _ = writeln!(
            w,
            "  <text x=\"{:.2}\" y=\"{:.2}\">{label}</text>",
            legend_x + 18.0,
            y + 10.0
        );
    }
    let _ = writeln!(w, "</svg>");
    if !svg.is_ascii() {
        // Fixed-format output must stay ASCII; anything else is a bug here.
        return Err(PlotError::Format("non-ascii output".into()));
    }
    Ok(svg)
}

/// Smallest 1/2/5×10^k step at least `target`, for integer axis ticks.
fn nice_step(target: f64) -> i64 {
    let mut scale = 1i64;
    loop {
        for m in [1, 2, 5] {
            let cand = scale * m;
            if cand as f64 >= target {
                return cand;
            }
        }
        scale *= 10;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::game::Role;

    fn record(run: u32, def: i64, att: i64) -> RunRecord {
        RunRecord {
            run,
            game: 1,
            winner: Role::Defender,
            defender_turns: 10,
            defender_score: 32,
            attacker_score: 0,
            defender_reward_sum: def,
            attacker_reward_sum: att,
            seed: 7,
        }
    }

    #[test]
    fn empty_input_is_an_error() {
        let dir = tempfile::tempdir().unwrap();
        let err = emit_reward_plot(&[], &dir.path().join("plot.svg")).unwrap_err();
        assert!(matches!(err, PlotError::Empty));
    }

    #[test]
    fn chart_has_one_bar_pair_per_run() {
        let records = vec![record(1, 5, -3), record(2, 0, 2), record(3, -4, 7)];
        let svg = render_svg(&records).unwrap();
        let defenders = svg.matches(DEFENDER_FILL).count();
        let attackers = svg.matches(ATTACKER_FILL).count();
        // One rect per run per side, plus one legend swatch per side.
        assert_eq!(defenders, records.len() + 1);
        assert_eq!(attackers, records.len() + 1);
        assert!(svg.starts_with("<svg "));
        assert!(svg.trim_end().ends_with("</svg>"));
        // Negative values flip around the baseline, never bar heights.
        assert!(!svg.contains("height=\"-"));
    }

    #[test]
    fn outputs_are_byte_deterministic() {
        let records = vec![record(1, 120, -40), record(2, 85, 13)];
        let dir = tempfile::tempdir().unwrap();
        let a_svg = dir.path().join("a.svg");
        let b_svg = dir.path().join("b.svg");
        emit_reward_plot(&records, &a_svg).unwrap();
        emit_reward_plot(&records, &b_svg).unwrap();
        assert_eq!(
            std::fs::read(&a_svg).unwrap(),
            std::fs::read(&b_svg).unwrap()
        );
        assert_eq!(
            std::fs::read(a_svg.with_extension("csv")).unwrap(),
            std::fs::read(b_svg.with_extension("csv")).unwrap()
        );
    }

    #[test]
    fn csv_twin_carries_the_record_values() {
        let records = vec![record(1, 11, -2), record(2, -7, 0)];
        let csv = render_csv(&records);
        let mut lines = csv.lines();
        assert_eq!(
            lines.next().unwrap(),
            "run,game,defender_reward_sum,attacker_reward_sum"
        );
        assert_eq!(lines.next().unwrap(), "1,1,11,-2");
        assert_eq!(lines.next().unwrap(), "2,1,-7,0");
        assert_eq!(lines.next(), None);
    }

    #[test]
    fn all_zero_rewards_still_render() {
        let svg = render_svg(&[record(1, 0, 0)]).unwrap();
        // Degenerate range widens to one step so the scale stays finite.
        assert!(svg.contains(">0</text>"));
        assert!(svg.contains(">1</text>"));
    }

    #[test]
    fn tick_step_snaps_to_round_values() {
        assert_eq!(nice_step(0.5), 1);
        assert_eq!(nice_step(1.0), 1);
        assert_eq!(nice_step(1.2), 2);
        assert_eq!(nice_step(3.0), 5);
        assert_eq!(nice_step(7.0), 10);
        assert_eq!(nice_step(130.0), 200);
        assert_eq!(nice_step(2600.0), 5000);
    }
}

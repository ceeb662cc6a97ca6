//! Text renderings of run outputs. Each begins with the run identity so any
//! file can be traced back to the config that produced it.

use std::fmt::Write;

use hexevo_core::evolution::{GenerationStats, RecoveryPoint};
use hexevo_core::legs::LEGS;
use hexevo_core::signature::{SignatureGrid, SignatureSample};
use hexevo_core::simulator::{GaitDiagram, Pose};

use crate::config::RunIdentity;

/// Cells holding at least this fraction of the grid mass lie inside the
/// heatmap contour.
pub const CONTOUR_MASS_FRACTION: f64 = 2.5e-4;

const LEG_NAMES: [&str; LEGS] = ["RF", "RM", "RR", "LR", "LM", "LF"];

fn csv_header(id: &RunIdentity, columns: &str) -> String {
    format!("# run_id={} config_hash={}\n{columns}\n", id.run_id, id.config_hash)
}

pub fn stats_csv(id: &RunIdentity, stats: &[GenerationStats]) -> String {
    let mut out = csv_header(id, "generation,best_P,median_P,best_F,best_Theta");
    for s in stats {
        writeln!(out, "{},{},{},{},{}", s.generation, s.best_p, s.median_p, s.best_f, s.best_theta).unwrap();
    }
    out
}

pub fn trajectory_csv(id: &RunIdentity, trajectory: &[Pose]) -> String {
    let mut out = csv_header(id, "t,x,y,heading");
    for p in trajectory {
        writeln!(out, "{},{},{},{}", p.t, p.x, p.y, p.heading).unwrap();
    }
    out
}

/// One oscillator-network snapshot per control tick.
pub struct TraceRow {
    pub t: f64,
    pub theta: Vec<f64>,
    pub alpha: Vec<f64>,
    pub gamma: Vec<f64>,
}

pub fn cpg_trace_csv(id: &RunIdentity, rows: &[TraceRow]) -> String {
    let n = rows.first().map_or(0, |r| r.theta.len());
    let mut columns = String::from("t");
    for name in ["theta", "alpha", "gamma"] {
        for i in 1..=n {
            write!(columns, ",{name}_{i}").unwrap();
        }
    }
    let mut out = csv_header(id, &columns);
    for r in rows {
        write!(out, "{}", r.t).unwrap();
        for v in r.theta.iter().chain(&r.alpha).chain(&r.gamma) {
            write!(out, ",{v}").unwrap();
        }
        out.push('\n');
    }
    out
}

pub fn samples_csv(id: &RunIdentity, samples: &[SignatureSample]) -> String {
    let mut out = csv_header(id, "sample_id,f1_raw,f2_raw,f2_clamped,P_parent,P_mutant");
    for (k, s) in samples.iter().enumerate() {
        writeln!(out, "{k},{},{},{},{},{}", s.f1, s.f2_raw, s.f2, s.parent_p, s.mutant_p).unwrap();
    }
    out
}

/// Density matrix: the first row lists f2 cell centers, each following row
/// starts with its f1 cell center. Rows run from low to high f1.
pub fn grid_csv(id: &RunIdentity, grid: &SignatureGrid) -> String {
    let mut out = format!(
        "# run_id={} config_hash={}\n# bandwidth_f2={} bandwidth_f1={} window_f2=[{},{}] window_f1=[{},{}]\n",
        id.run_id,
        id.config_hash,
        grid.bandwidth.0,
        grid.bandwidth.1,
        grid.window.x_min,
        grid.window.x_max,
        grid.window.y_min,
        grid.window.y_max,
    );
    out.push_str("f1\\f2");
    for ix in 0..grid.size {
        write!(out, ",{}", grid.x_center(ix)).unwrap();
    }
    out.push('\n');
    for iy in 0..grid.size {
        write!(out, "{}", grid.y_center(iy)).unwrap();
        for ix in 0..grid.size {
            write!(out, ",{}", grid.at(ix, iy)).unwrap();
        }
        out.push('\n');
    }
    out
}

pub fn recovery_csv(id: &RunIdentity, curve: &[RecoveryPoint]) -> String {
    let mut out = csv_header(id, "generation,best_P,proportion_restored");
    for p in curve {
        writeln!(out, "{},{},{}", p.generation, p.best_p, p.proportion_restored).unwrap();
    }
    out
}

/// Plain PBM: one image row per leg, one column per time step, 1 = contact.
pub fn gait_pbm(id: &RunIdentity, gait: &GaitDiagram) -> String {
    let mut out = format!("P1\n# run_id={} config_hash={}\n{} {}\n", id.run_id, id.config_hash, gait.steps(), LEGS);
    for leg in 0..LEGS {
        let row: Vec<&str> = (0..gait.steps())
            .map(|t| if gait.contact(t, leg) { "1" } else { "0" })
            .collect();
        out.push_str(&row.join(" "));
        out.push('\n');
    }
    out
}

fn svg_open(id: &RunIdentity, width: usize, height: usize) -> String {
    format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{width}\" height=\"{height}\" viewBox=\"0 0 {width} {height}\">\n\
         <!-- run_id={} config_hash={} -->\n<metadata>run_id={} config_hash={}</metadata>\n",
        id.run_id, id.config_hash, id.run_id, id.config_hash
    )
}

pub fn gait_svg(id: &RunIdentity, gait: &GaitDiagram) -> String {
    const LEFT: usize = 30;
    const CELL_W: usize = 2;
    const ROW_H: usize = 12;
    let width = LEFT + gait.steps() * CELL_W + 10;
    let height = LEGS * ROW_H + 20;
    let mut out = svg_open(id, width, height);
    out.push_str("<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n");
    for (leg, name) in LEG_NAMES.iter().enumerate() {
        let y = 10 + leg * ROW_H;
        writeln!(out, "<text x=\"2\" y=\"{}\" font-size=\"9\" font-family=\"monospace\">{name}</text>", y + 9).unwrap();
        // merge runs of contact into single rectangles
        let mut t = 0;
        while t < gait.steps() {
            if !gait.contact(t, leg) {
                t += 1;
                continue;
            }
            let start = t;
            while t < gait.steps() && gait.contact(t, leg) {
                t += 1;
            }
            writeln!(
                out,
                "<rect x=\"{}\" y=\"{}\" width=\"{}\" height=\"{}\" fill=\"black\"/>",
                LEFT + start * CELL_W,
                y + 1,
                (t - start) * CELL_W,
                ROW_H - 2
            )
            .unwrap();
        }
    }
    out.push_str("</svg>\n");
    out
}

/// White to dark blue by density relative to the maximum.
fn shade(v: f64) -> String {
    let v = v.clamp(0.0, 1.0);
    let mix = |hi: f64, lo: f64| (hi + (lo - hi) * v).round() as u8;
    format!("#{:02x}{:02x}{:02x}", mix(255.0, 8.0), mix(255.0, 48.0), mix(255.0, 107.0))
}

/// Density heatmap with f2 across and f1 up, plus the outline of the cells
/// holding at least [`CONTOUR_MASS_FRACTION`] of the mass.
pub fn heatmap_svg(id: &RunIdentity, grid: &SignatureGrid) -> String {
    const CELL: usize = 4;
    const MARGIN: usize = 40;
    let n = grid.size;
    let side = n * CELL;
    let mut out = svg_open(id, side + 2 * MARGIN, side + 2 * MARGIN);
    out.push_str("<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n");
    let max = grid.density.iter().cloned().fold(0.0, f64::max);
    // screen row 0 is the top, which is the highest f1
    let px = |ix: usize| MARGIN + ix * CELL;
    let py = |iy: usize| MARGIN + (n - iy) * CELL;
    for iy in 0..n {
        for ix in 0..n {
            let v = if max > 0.0 { grid.at(ix, iy) / max } else { 0.0 };
            if v > 0.0 {
                writeln!(
                    out,
                    "<rect x=\"{}\" y=\"{}\" width=\"{CELL}\" height=\"{CELL}\" fill=\"{}\"/>",
                    px(ix),
                    py(iy + 1),
                    shade(v)
                )
                .unwrap();
            }
        }
    }

    let total = grid.mass();
    let inside = |ix: isize, iy: isize| {
        ix >= 0
            && iy >= 0
            && (ix as usize) < n
            && (iy as usize) < n
            && total > 0.0
            && grid.cell_mass(ix as usize, iy as usize) >= CONTOUR_MASS_FRACTION * total
    };
    let mut path = String::new();
    for iy in 0..n as isize {
        for ix in 0..n as isize {
            if !inside(ix, iy) {
                continue;
            }
            let (x0, x1) = (px(ix as usize), px(ix as usize + 1));
            let (y_top, y_bottom) = (py(iy as usize + 1), py(iy as usize));
            if !inside(ix - 1, iy) {
                write!(path, "M{x0} {y_top}V{y_bottom}").unwrap();
            }
            if !inside(ix + 1, iy) {
                write!(path, "M{x1} {y_top}V{y_bottom}").unwrap();
            }
            if !inside(ix, iy + 1) {
                write!(path, "M{x0} {y_top}H{x1}").unwrap();
            }
            if !inside(ix, iy - 1) {
                write!(path, "M{x0} {y_bottom}H{x1}").unwrap();
            }
        }
    }
    if !path.is_empty() {
        writeln!(out, "<path d=\"{path}\" fill=\"none\" stroke=\"#d62728\" stroke-width=\"1\"/>").unwrap();
    }

    let w = grid.window;
    writeln!(
        out,
        "<rect x=\"{MARGIN}\" y=\"{MARGIN}\" width=\"{side}\" height=\"{side}\" fill=\"none\" stroke=\"black\"/>\n\
         <text x=\"{}\" y=\"{}\" font-size=\"12\" text-anchor=\"middle\">f2 (gait diversity)</text>\n\
         <text x=\"12\" y=\"{}\" font-size=\"12\" text-anchor=\"middle\" transform=\"rotate(-90 12 {})\">f1 (fitness change)</text>\n\
         <text x=\"{MARGIN}\" y=\"{}\" font-size=\"10\">{}</text>\n\
         <text x=\"{}\" y=\"{}\" font-size=\"10\" text-anchor=\"end\">{}</text>\n\
         <text x=\"{}\" y=\"{}\" font-size=\"10\" text-anchor=\"end\">{}</text>\n\
         <text x=\"{}\" y=\"{}\" font-size=\"10\" text-anchor=\"end\">{}</text>",
        MARGIN + side / 2,
        side + 2 * MARGIN - 8,
        MARGIN + side / 2,
        MARGIN + side / 2,
        MARGIN + side + 14,
        w.x_min,
        MARGIN + side,
        MARGIN + side + 14,
        w.x_max,
        MARGIN - 2,
        MARGIN + side,
        w.y_min,
        MARGIN - 2,
        MARGIN + 10,
        w.y_max,
    )
    .unwrap();
    out.push_str("</svg>\n");
    out
}

//! SVG snapshots of world states.

use super::{Shape, Trajectory, WorldState};
use std::fmt::Write;

const PX: f64 = 512.0;

fn sx(x: f64) -> f64 {
    x * PX
}

fn sy(y: f64) -> f64 {
    (1.0 - y) * PX
}

fn open(out: &mut String, w: &WorldState) {
    let cfg = w.config();
    let _ = write!(
        out,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{PX}\" height=\"{PX}\" viewBox=\"0 0 {PX} {PX}\">\n\
         <rect x=\"0\" y=\"0\" width=\"{PX}\" height=\"{PX}\" fill=\"#f7f7f2\" stroke=\"#333\" stroke-width=\"2\"/>\n\
         <g stroke=\"#c8c8c0\" stroke-width=\"1\" fill=\"none\" stroke-dasharray=\"4 4\">\n\
         <line x1=\"{h}\" y1=\"0\" x2=\"{h}\" y2=\"{PX}\"/>\n<line x1=\"0\" y1=\"{h}\" x2=\"{PX}\" y2=\"{h}\"/>\n\
         <circle cx=\"{h}\" cy=\"{h}\" r=\"{m:.2}\"/>\n",
        h = PX / 2.0,
        m = cfg.r_middle * PX
    );
    for (cx, cy) in [(0.0, 0.0), (1.0, 0.0), (0.0, 1.0), (1.0, 1.0)] {
        let _ = writeln!(
            out,
            "<circle cx=\"{:.2}\" cy=\"{:.2}\" r=\"{:.2}\"/>",
            sx(cx),
            sy(cy),
            cfg.r_corner * PX
        );
    }
    out.push_str("</g>\n");
}

fn objects(out: &mut String, w: &WorldState) {
    for (b, p) in w.scene.bodies.iter().zip(&w.poses) {
        let fill = b.color.hex();
        match b.shape {
            Shape::Circle { radius } => {
                let _ = writeln!(
                    out,
                    "<circle id=\"o{}\" cx=\"{:.2}\" cy=\"{:.2}\" r=\"{:.2}\" fill=\"{fill}\" stroke=\"#222\"/>",
                    b.id,
                    sx(p.x),
                    sy(p.y),
                    radius * PX
                );
            }
            _ => {
                let (s, c) = p.theta.sin_cos();
                let pts: Vec<String> = b
                    .shape
                    .vertices()
                    .iter()
                    .map(|&(vx, vy)| {
                        let (wx, wy) = (p.x + c * vx - s * vy, p.y + s * vx + c * vy);
                        format!("{:.2},{:.2}", sx(wx), sy(wy))
                    })
                    .collect();
                let _ = writeln!(
                    out,
                    "<polygon id=\"o{}\" points=\"{}\" fill=\"{fill}\" stroke=\"#222\"/>",
                    b.id,
                    pts.join(" ")
                );
            }
        }
    }
}

fn agent(out: &mut String, w: &WorldState) {
    let stroke = if w.agent.grip { "#000" } else { "#fff" };
    let _ = writeln!(
        out,
        "<circle id=\"agent\" cx=\"{:.2}\" cy=\"{:.2}\" r=\"{:.2}\" fill=\"#3b6fd8\" stroke=\"{stroke}\" stroke-width=\"2\"/>",
        sx(w.agent.x),
        sy(w.agent.y),
        w.config().agent_radius * PX
    );
}

/// One frame: region guides, objects and the agent. The agent outline is dark while the
/// gripper is closed.
pub fn render_state(w: &WorldState) -> String {
    let mut out = String::new();
    open(&mut out, w);
    objects(&mut out, w);
    agent(&mut out, w);
    out.push_str("</svg>\n");
    out
}

/// The terminal state with the agent's path drawn over it.
pub fn render_summary(tau: &Trajectory) -> String {
    let last = tau.terminal();
    let mut out = String::new();
    open(&mut out, last);
    objects(&mut out, last);
    let pts: Vec<String> = tau
        .states
        .iter()
        .map(|w| format!("{:.2},{:.2}", sx(w.agent.x), sy(w.agent.y)))
        .collect();
    let _ = writeln!(
        out,
        "<polyline points=\"{}\" fill=\"none\" stroke=\"#3b6fd8\" stroke-width=\"1.5\" stroke-opacity=\"0.7\"/>",
        pts.join(" ")
    );
    agent(&mut out, last);
    out.push_str("</svg>\n");
    out
}

/// Frame indices drawn for a given stride: every `stride`-th frame plus the terminal state.
pub fn strided_indices(n_frames: usize, stride: usize) -> Vec<usize> {
    let stride = stride.max(1);
    let mut idx: Vec<usize> = (0..n_frames).step_by(stride).collect();
    idx.push(n_frames);
    idx
}

//! Static SVG and scene-text renderings of a tree.

use std::fmt::{self, Write};
use std::str::FromStr;

use thiserror::Error;

use super::layout::{
    layout_alt3d, layout_fixed_width, layout_leaf_spacing, treemap_project, LayoutPoint,
};
use super::{NodeKind, NodeStatus, SearchTree, TreeNode};
use crate::protocol::WireId;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum LayoutKind {
    FixedWidth,
    LeafSpacing,
    Alt3d,
    Treemap,
}

impl LayoutKind {
    pub const ALL: [LayoutKind; 4] = [
        LayoutKind::FixedWidth,
        LayoutKind::LeafSpacing,
        LayoutKind::Alt3d,
        LayoutKind::Treemap,
    ];

    pub fn name(self) -> &'static str {
        match self {
            LayoutKind::FixedWidth => "fixed-width",
            LayoutKind::LeafSpacing => "leaf-spacing",
            LayoutKind::Alt3d => "alt3d",
            LayoutKind::Treemap => "treemap",
        }
    }
}

impl fmt::Display for LayoutKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for LayoutKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        LayoutKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| format!("unknown layout `{s}`"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Format {
    Svg,
    Scene,
}

impl fmt::Display for Format {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Format::Svg => "svg",
            Format::Scene => "scene",
        })
    }
}

impl FromStr for Format {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "svg" => Ok(Format::Svg),
            "scene" => Ok(Format::Scene),
            _ => Err(format!("unknown format `{s}`")),
        }
    }
}

/// Geometry in output units.
#[derive(Debug, Clone, PartialEq)]
pub struct ExportOptions {
    /// Fixed-width tree width; treemap side.
    pub width: f64,
    /// Vertical distance between depths.
    pub dy: f64,
    /// Distance between planes in the 3D layout.
    pub dz: f64,
    /// Distance between neighbouring leaves.
    pub s: f64,
    /// SVG border around 2D trees.
    pub margin: f64,
}

impl Default for ExportOptions {
    fn default() -> Self {
        ExportOptions {
            width: 800.0,
            dy: 40.0,
            dz: 1.0,
            s: 16.0,
            margin: 20.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ExportError {
    #[error("{layout} layout cannot be exported as {format}")]
    Unsupported { layout: LayoutKind, format: Format },
}

pub fn export(
    tree: &SearchTree,
    layout: LayoutKind,
    format: Format,
) -> Result<String, ExportError> {
    export_with(tree, layout, format, &ExportOptions::default())
}

pub fn export_with(
    tree: &SearchTree,
    layout: LayoutKind,
    format: Format,
    opts: &ExportOptions,
) -> Result<String, ExportError> {
    match (layout, format) {
        (LayoutKind::Alt3d, Format::Svg) => Err(ExportError::Unsupported { layout, format }),
        (LayoutKind::Treemap, Format::Svg) => Ok(treemap_svg(tree, opts)),
        (_, Format::Svg) => Ok(tree_svg(tree, &points(tree, layout, opts), opts.margin)),
        (_, Format::Scene) => Ok(scene(tree, &points(tree, layout, opts))),
    }
}

/// Positions by node index, root included.
fn points(tree: &SearchTree, layout: LayoutKind, opts: &ExportOptions) -> Vec<LayoutPoint<f64>> {
    let map = match layout {
        LayoutKind::FixedWidth => layout_fixed_width(tree, opts.width, opts.dy).points,
        LayoutKind::LeafSpacing => layout_leaf_spacing(tree, opts.s, opts.dy),
        LayoutKind::Alt3d => layout_alt3d(tree, opts.dz).points,
        LayoutKind::Treemap => {
            // projected onto the floor of a width × width square
            let alt = layout_alt3d::<f64>(tree, opts.dz);
            alt.rects
                .values()
                .map(|r| {
                    let (x, y) = r.center();
                    LayoutPoint {
                        x: x * opts.width,
                        y: y * opts.width,
                        z: 0.0,
                    }
                })
                .zip(alt.rects.keys())
                .map(|(p, &id)| (id, p))
                .collect()
        }
    };
    let margin = match layout {
        LayoutKind::FixedWidth | LayoutKind::LeafSpacing => opts.margin,
        LayoutKind::Alt3d | LayoutKind::Treemap => 0.0,
    };
    tree.raw()
        .iter()
        .map(|n| {
            let p = &map[&n.id];
            LayoutPoint {
                x: p.x + margin,
                y: p.y + margin,
                z: p.z,
            }
        })
        .collect()
}

fn num(v: f64, digits: usize) -> String {
    let s = format!("{v:.digits$}");
    match s.strip_prefix('-') {
        Some(rest) if rest.bytes().all(|b| b == b'0' || b == b'.') => rest.to_string(),
        _ => s,
    }
}

fn xml(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for c in s.chars() {
        match c {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            '"' => out.push_str("&quot;"),
            '\'' => out.push_str("&apos;"),
            _ => out.push(c),
        }
    }
    out
}

fn class(n: &TreeNode) -> String {
    let kind = match n.kind {
        NodeKind::Call => "call",
        NodeKind::Success => "success",
    };
    let status = match n.status {
        NodeStatus::Active => "active",
        NodeStatus::Retracted => "retracted",
    };
    let sol = if n.solution { " solution" } else { "" };
    format!("node {kind} {status}{sol}")
}

const STYLE: &str = "<style>\
.edge{stroke:#555;stroke-width:1}\
.glyph{fill:#36c;stroke:#123}\
.success .glyph{fill:#3a3}\
.retracted .glyph,.retracted .edge{fill:#ccc;stroke:#bbb;stroke-dasharray:3 2}\
.cross{stroke:#e00;stroke-width:2}\
.region{fill:none;stroke:#888;stroke-width:0.5}\
.leaf{stroke:#fff;stroke-width:0.5}\
</style>\n";

fn cross(out: &mut String, x: f64, y: f64, r: f64) {
    let (a, b, c, d) = (num(x - r, 3), num(x + r, 3), num(y - r, 3), num(y + r, 3));
    let _ = writeln!(
        out,
        "<path class=\"cross\" d=\"M{a} {c}L{b} {d}M{a} {d}L{b} {c}\"/>"
    );
}

fn tree_svg(tree: &SearchTree, pts: &[LayoutPoint<f64>], margin: f64) -> String {
    let nodes = tree.raw();
    let w = pts.iter().map(|p| p.x).fold(0.0, f64::max) + margin;
    let h = pts.iter().map(|p| p.y).fold(0.0, f64::max) + margin;
    let mut out = String::new();
    let _ = writeln!(
        out,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{}\" height=\"{}\">",
        num(w, 3),
        num(h, 3)
    );
    out.push_str(STYLE);
    let index: std::collections::HashMap<WireId, usize> =
        nodes.iter().enumerate().map(|(i, n)| (n.id, i)).collect();
    for (i, n) in nodes.iter().enumerate().skip(1) {
        let p = &pts[i];
        let (x, y) = (num(p.x, 3), num(p.y, 3));
        let _ = writeln!(out, "<g id=\"n{}\" class=\"{}\">", n.id, class(n));
        if n.parent != 0 {
            let q = &pts[index[&n.parent]];
            let _ = writeln!(
                out,
                "<line class=\"edge\" x1=\"{}\" y1=\"{}\" x2=\"{x}\" y2=\"{y}\"/>",
                num(q.x, 3),
                num(q.y, 3)
            );
        }
        match n.kind {
            NodeKind::Call => {
                let _ = write!(
                    out,
                    "<circle class=\"glyph\" cx=\"{x}\" cy=\"{y}\" r=\"4\">"
                );
            }
            NodeKind::Success => {
                let _ = write!(
                    out,
                    "<rect class=\"glyph\" x=\"{}\" y=\"{}\" width=\"8\" height=\"8\">",
                    num(p.x - 4.0, 3),
                    num(p.y - 4.0, 3)
                );
            }
        }
        let _ = writeln!(
            out,
            "<title>{}</title></{}>",
            xml(&n.label),
            if n.kind == NodeKind::Call {
                "circle"
            } else {
                "rect"
            }
        );
        if n.solution {
            cross(&mut out, p.x, p.y, 6.0);
        }
        out.push_str("</g>\n");
    }
    out.push_str("</svg>\n");
    out
}

fn treemap_svg(tree: &SearchTree, opts: &ExportOptions) -> String {
    let w = opts.width;
    let leaves = treemap_project::<f64>(tree);
    let rects = layout_alt3d::<f64>(tree, opts.dz).rects;
    let mut out = String::new();
    let _ = writeln!(
        out,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{0}\" height=\"{0}\" viewBox=\"0 0 {0} {0}\">",
        num(w, 3)
    );
    out.push_str(STYLE);
    for n in tree.nodes() {
        let r = &rects[&n.id];
        let leaf = leaves.contains_key(&n.id);
        let cls = if leaf { "leaf" } else { "region" };
        let _ = writeln!(out, "<g id=\"n{}\" class=\"{}\">", n.id, class(n));
        let _ = writeln!(
            out,
            "<rect class=\"{cls}\" x=\"{}\" y=\"{}\" width=\"{}\" height=\"{}\"><title>{}</title></rect>",
            num(r.x0 * w, 3),
            num(r.y0 * w, 3),
            num(r.width() * w, 3),
            num(r.height() * w, 3),
            xml(&n.label)
        );
        if n.solution {
            let (cx, cy) = r.center();
            let rad = (r.width().min(r.height()) * w / 3.0).min(6.0);
            cross(&mut out, cx * w, cy * w, rad);
        }
        out.push_str("</g>\n");
    }
    out.push_str("</svg>\n");
    out
}

fn quote(s: &str) -> String {
    let mut out = String::with_capacity(s.len() + 2);
    out.push('"');
    for c in s.chars() {
        match c {
            '"' => out.push_str("\\\""),
            '\\' => out.push_str("\\\\"),
            '\n' => out.push_str("\\n"),
            '\r' => out.push_str("\\r"),
            _ => out.push(c),
        }
    }
    out.push('"');
    out
}

fn scene(tree: &SearchTree, pts: &[LayoutPoint<f64>]) -> String {
    let mut out = String::from("tree-scene v1\n");
    for (i, n) in tree.raw().iter().enumerate().skip(1) {
        let p = &pts[i];
        let kind = match n.kind {
            NodeKind::Call => "call",
            NodeKind::Success => "success",
        };
        let status = match n.status {
            NodeStatus::Active => "active",
            NodeStatus::Retracted => "retracted",
        };
        let _ = writeln!(
            out,
            "{} {} {kind} {status} {} {} {} {} {}",
            n.id,
            n.parent,
            u8::from(n.solution),
            num(p.x, 6),
            num(p.y, 6),
            num(p.z, 6),
            quote(&n.label)
        );
    }
    out
}

use std::collections::{BTreeMap, HashMap};

use thiserror::Error;

use super::SearchTree;
use crate::protocol::{EngineMessage, WireId};
use crate::scalar::Scalar;

#[derive(Debug, Clone, PartialEq)]
pub struct LayoutPoint<T> {
    pub x: T,
    pub y: T,
    pub z: T,
}

/// `[x0, x1] × [y0, y1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct LayoutRect<T> {
    pub x0: T,
    pub y0: T,
    pub x1: T,
    pub y1: T,
}

impl<T: Scalar> LayoutRect<T> {
    pub fn unit() -> Self {
        LayoutRect {
            x0: T::zero(),
            y0: T::zero(),
            x1: T::one(),
            y1: T::one(),
        }
    }

    pub fn width(&self) -> T {
        self.x1.clone() - self.x0.clone()
    }

    pub fn height(&self) -> T {
        self.y1.clone() - self.y0.clone()
    }

    pub fn area(&self) -> T {
        self.width() * self.height()
    }

    pub fn center(&self) -> (T, T) {
        let two = T::one() + T::one();
        (
            (self.x0.clone() + self.x1.clone()) / two.clone(),
            (self.y0.clone() + self.y1.clone()) / two,
        )
    }
}

/// How a node's extent is shared among its children.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum Split {
    /// Proportional to each child's leaf count.
    #[default]
    Leaves,
    /// Equal shares.
    Equal,
}

/// Cumulative share boundaries: `lo + (hi − lo)·cum/total` for each child,
/// so neighbouring children meet exactly.
fn cuts<T: Scalar>(lo: &T, hi: &T, weights: &[u64]) -> Vec<T> {
    let total: u64 = weights.iter().sum();
    let span = hi.clone() - lo.clone();
    let mut cum = 0;
    let mut out = Vec::with_capacity(weights.len() + 1);
    out.push(lo.clone());
    for (k, w) in weights.iter().enumerate() {
        cum += w;
        out.push(if k + 1 == weights.len() {
            hi.clone()
        } else {
            lo.clone() + span.clone() * T::from_count(cum) / T::from_count(total)
        });
    }
    out
}

fn weights(tree: &SearchTree, counts: &[u64], idx: usize, split: Split) -> Vec<u64> {
    tree.child_indices(idx)
        .iter()
        .map(|&c| match split {
            Split::Leaves => counts[c],
            Split::Equal => 1,
        })
        .collect()
}

fn by_id<V>(tree: &SearchTree, values: Vec<V>) -> BTreeMap<WireId, V> {
    tree.raw().iter().map(|n| n.id).zip(values).collect()
}

fn depth_times<T: Scalar>(depth: usize, step: &T) -> T {
    T::from_count(depth as u64) * step.clone()
}

/// Positions and horizontal extents of the fixed-width layout.
#[derive(Debug, Clone, PartialEq)]
pub struct FixedWidth<T> {
    pub points: BTreeMap<WireId, LayoutPoint<T>>,
    /// `[lo, hi]` owned by each node.
    pub spans: BTreeMap<WireId, (T, T)>,
}

/// The root (id 0) spans `[0, w]`; children share their parent's span by
/// leaf count; a node sits at the center of its span, `depth·dy` down.
pub fn layout_fixed_width<T: Scalar>(tree: &SearchTree, w: T, dy: T) -> FixedWidth<T> {
    layout_fixed_width_with(tree, w, dy, Split::Leaves)
}

pub fn layout_fixed_width_with<T: Scalar>(
    tree: &SearchTree,
    w: T,
    dy: T,
    split: Split,
) -> FixedWidth<T> {
    let nodes = tree.raw();
    let counts = tree.leaf_counts();
    let mut spans: Vec<Option<(T, T)>> = vec![None; nodes.len()];
    spans[0] = Some((T::zero(), w));
    let two = T::one() + T::one();
    let mut points = Vec::with_capacity(nodes.len());
    // parents precede children in creation order
    for (i, n) in nodes.iter().enumerate() {
        let (lo, hi) = spans[i].clone().expect("parent laid out first");
        let cs = cuts(&lo, &hi, &weights(tree, &counts, i, split));
        for (k, &c) in tree.child_indices(i).iter().enumerate() {
            spans[c] = Some((cs[k].clone(), cs[k + 1].clone()));
        }
        points.push(LayoutPoint {
            x: (lo + hi) / two.clone(),
            y: depth_times(n.depth, &dy),
            z: T::zero(),
        });
    }
    let spans = spans
        .into_iter()
        .map(|s| s.expect("every node reached"))
        .collect();
    FixedWidth {
        points: by_id(tree, points),
        spans: by_id(tree, spans),
    }
}

/// Leaves `s` apart in depth-first order; a parent is centered between
/// its first and last child.
pub fn layout_leaf_spacing<T: Scalar>(
    tree: &SearchTree,
    s: T,
    dy: T,
) -> BTreeMap<WireId, LayoutPoint<T>> {
    let nodes = tree.raw();
    let mut xs: Vec<T> = vec![T::zero(); nodes.len()];
    let mut next_leaf = 0u64;
    let mut stack = vec![0usize];
    while let Some(i) = stack.pop() {
        let kids = tree.child_indices(i);
        if kids.is_empty() {
            xs[i] = T::from_count(next_leaf) * s.clone();
            next_leaf += 1;
        }
        stack.extend(kids.iter().rev());
    }
    let two = T::one() + T::one();
    for i in (0..nodes.len()).rev() {
        let kids = tree.child_indices(i);
        if let (Some(&f), Some(&l)) = (kids.first(), kids.last()) {
            xs[i] = (xs[f].clone() + xs[l].clone()) / two.clone();
        }
    }
    let points = xs
        .into_iter()
        .zip(nodes)
        .map(|(x, n)| LayoutPoint {
            x,
            y: depth_times(n.depth, &dy),
            z: T::zero(),
        })
        .collect();
    by_id(tree, points)
}

/// The appended node's parent is not on the rightmost path.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("node {id}: parent {parent} is not on the rightmost path")]
pub struct NotRightmost {
    pub id: WireId,
    pub parent: WireId,
}

#[derive(Debug, Clone)]
struct LsNode<T> {
    id: WireId,
    parent: usize,
    first: Option<usize>,
    last: Option<usize>,
    depth: usize,
    x: T,
}

/// The leaf-spacing layout maintained node by node.
///
/// Nodes may only be appended under the rightmost path, which is where a
/// session always grows its tree. A new leaf then takes either its
/// parent's slot (if the parent was a leaf) or the next free slot, so no
/// existing leaf moves; only ancestors on the rightmost path are
/// re-centered.
#[derive(Debug, Clone)]
pub struct LeafSpacing<T> {
    s: T,
    dy: T,
    nodes: Vec<LsNode<T>>,
    index: HashMap<WireId, usize>,
    spine: Vec<usize>,
    next_leaf: u64,
}

impl<T: Scalar> LeafSpacing<T> {
    pub fn new(s: T, dy: T) -> Self {
        LeafSpacing {
            s,
            dy,
            nodes: vec![LsNode {
                id: 0,
                parent: 0,
                first: None,
                last: None,
                depth: 0,
                x: T::zero(),
            }],
            index: HashMap::from([(0, 0)]),
            spine: vec![0],
            next_leaf: 1,
        }
    }

    pub fn append(&mut self, id: WireId, parent: WireId) -> Result<(), NotRightmost> {
        let err = NotRightmost { id, parent };
        let &p = self.index.get(&parent).ok_or(err.clone())?;
        let pos = self.spine.iter().rposition(|&i| i == p).ok_or(err)?;
        self.spine.truncate(pos + 1);
        let idx = self.nodes.len();
        let x = if self.nodes[p].first.is_none() {
            self.nodes[p].x.clone()
        } else {
            let x = T::from_count(self.next_leaf) * self.s.clone();
            self.next_leaf += 1;
            x
        };
        let depth = self.nodes[p].depth + 1;
        self.nodes.push(LsNode {
            id,
            parent: p,
            first: None,
            last: None,
            depth,
            x,
        });
        self.index.insert(id, idx);
        self.spine.push(idx);
        let pn = &mut self.nodes[p];
        pn.first.get_or_insert(idx);
        pn.last = Some(idx);
        let two = T::one() + T::one();
        let mut cur = p;
        loop {
            let n = &self.nodes[cur];
            let (f, l) = (n.first.expect("has a child"), n.last.expect("has a child"));
            let x = (self.nodes[f].x.clone() + self.nodes[l].x.clone()) / two.clone();
            if x == self.nodes[cur].x {
                break;
            }
            self.nodes[cur].x = x;
            if cur == 0 {
                break;
            }
            cur = self.nodes[cur].parent;
        }
        Ok(())
    }

    /// Follows a stream: node and child frames append, clear resets.
    pub fn apply_event(&mut self, event: &EngineMessage) -> Result<(), NotRightmost> {
        match event {
            EngineMessage::Node { id, parent, .. } | EngineMessage::Child { id, parent, .. } => {
                self.append(*id, *parent)
            }
            EngineMessage::Clear => {
                *self = LeafSpacing::new(self.s.clone(), self.dy.clone());
                Ok(())
            }
            _ => Ok(()),
        }
    }

    pub fn point(&self, id: WireId) -> Option<LayoutPoint<T>> {
        self.index.get(&id).map(|&i| {
            let n = &self.nodes[i];
            LayoutPoint {
                x: n.x.clone(),
                y: depth_times(n.depth, &self.dy),
                z: T::zero(),
            }
        })
    }

    pub fn points(&self) -> BTreeMap<WireId, LayoutPoint<T>> {
        self.nodes
            .iter()
            .map(|n| (n.id, self.point(n.id).expect("indexed")))
            .collect()
    }

    /// Ids of the current leaves.
    pub fn leaves(&self) -> impl Iterator<Item = WireId> + '_ {
        self.nodes
            .iter()
            .filter(|n| n.first.is_none())
            .map(|n| n.id)
    }
}

/// Positions and regions of the alternating-planes layout.
#[derive(Debug, Clone, PartialEq)]
pub struct Alt3d<T> {
    pub points: BTreeMap<WireId, LayoutPoint<T>>,
    pub rects: BTreeMap<WireId, LayoutRect<T>>,
}

/// The root owns the unit square. A node at even depth splits its rect
/// among its children along x, at odd depth along y, by leaf count. A
/// node sits above the center of its rect at height `−depth·dz`.
pub fn layout_alt3d<T: Scalar>(tree: &SearchTree, dz: T) -> Alt3d<T> {
    layout_alt3d_with(tree, dz, Split::Leaves)
}

pub fn layout_alt3d_with<T: Scalar>(tree: &SearchTree, dz: T, split: Split) -> Alt3d<T> {
    let nodes = tree.raw();
    let counts = tree.leaf_counts();
    let mut rects: Vec<Option<LayoutRect<T>>> = vec![None; nodes.len()];
    rects[0] = Some(LayoutRect::unit());
    let mut points = Vec::with_capacity(nodes.len());
    for (i, n) in nodes.iter().enumerate() {
        let r = rects[i].clone().expect("parent laid out first");
        let along_x = n.depth % 2 == 0;
        let (lo, hi) = if along_x {
            (&r.x0, &r.x1)
        } else {
            (&r.y0, &r.y1)
        };
        let cs = cuts(lo, hi, &weights(tree, &counts, i, split));
        for (k, &c) in tree.child_indices(i).iter().enumerate() {
            let mut cr = r.clone();
            if along_x {
                cr.x0 = cs[k].clone();
                cr.x1 = cs[k + 1].clone();
            } else {
                cr.y0 = cs[k].clone();
                cr.y1 = cs[k + 1].clone();
            }
            rects[c] = Some(cr);
        }
        let (x, y) = r.center();
        points.push(LayoutPoint {
            x,
            y,
            z: T::zero() - depth_times(n.depth, &dz),
        });
    }
    let rects = rects
        .into_iter()
        .map(|r| r.expect("every node reached"))
        .collect();
    Alt3d {
        points: by_id(tree, points),
        rects: by_id(tree, rects),
    }
}

/// The slice-and-dice treemap: the alternating-planes rects of the leaves.
pub fn treemap_project<T: Scalar>(tree: &SearchTree) -> BTreeMap<WireId, LayoutRect<T>> {
    let alt = layout_alt3d::<T>(tree, T::one());
    tree.raw()
        .iter()
        .filter(|n| tree.children(n.id).next().is_none())
        .map(|n| (n.id, alt.rects[&n.id].clone()))
        .collect()
}

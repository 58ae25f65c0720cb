//! Quad-tree subdivision shared by the Levin integrator and the Gauss oracle.
//!
//! A rectangle is accepted when its own estimate agrees with the sum of the
//! estimates on its four quadrants to within `tol`; otherwise the quadrants
//! are refined. The reference order is a LIFO worklist with the quadrants
//! pushed lower-left, lower-right, upper-left, upper-right, so the last
//! quadrant is processed first. The parallel path walks the same tree with
//! fork-join recursion and concatenates accepted rectangles in that order,
//! which makes the summed value bit-identical to the sequential one.

use num_complex::Complex64;

use crate::error::Result;
use crate::par;
use crate::rect::Rectangle;

/// A fixed-order rule producing an estimate on one rectangle.
pub trait RectRule: Sync {
    type Estimate: Send;

    fn estimate(&self, rect: Rectangle) -> Result<Self::Estimate>;

    fn value(est: &Self::Estimate) -> Complex64;

    /// Point evaluations spent on the estimate.
    fn fevals(_est: &Self::Estimate) -> usize {
        0
    }

    /// Boundary sub-intervals spent on the estimate.
    fn subints(_est: &Self::Estimate) -> usize {
        0
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DriverConfig {
    pub tol: f64,
    pub max_depth: usize,
    pub parallel: bool,
    /// Reuse the quadrant estimates as the whole-rectangle estimates of the
    /// children instead of recomputing them. Results are identical.
    pub reuse_children: bool,
}

#[derive(Debug, Clone)]
pub struct Accepted<E> {
    pub rect: Rectangle,
    pub depth: usize,
    pub estimate: E,
    /// False when accepted only because `max_depth` was reached.
    pub converged: bool,
}

#[derive(Debug, Clone)]
pub struct DriveOutcome<E> {
    pub value: Complex64,
    /// Accepted rectangles in acceptance order.
    pub accepted: Vec<Accepted<E>>,
    pub rect_evals: usize,
    pub fevals: usize,
    pub subints: usize,
    pub depth_exceeded: bool,
}

#[derive(Debug, Default, Clone, Copy)]
struct Cost {
    rect_evals: usize,
    fevals: usize,
    subints: usize,
}

impl Cost {
    fn charge<R: RectRule>(&mut self, est: &R::Estimate) {
        self.rect_evals += 1;
        self.fevals += R::fevals(est);
        self.subints += R::subints(est);
    }

    fn merge(&mut self, other: Cost) {
        self.rect_evals += other.rect_evals;
        self.fevals += other.fevals;
        self.subints += other.subints;
    }
}

enum Verdict<E> {
    Accept(bool),
    Split([E; 4]),
}

fn judge<R: RectRule>(whole: &R::Estimate, children: [R::Estimate; 4], depth: usize, cfg: &DriverConfig) -> Verdict<R::Estimate> {
    let sum = R::value(&children[0]) + R::value(&children[1]) + R::value(&children[2]) + R::value(&children[3]);
    let converged = (R::value(whole) - sum).norm() < cfg.tol;
    if converged || depth >= cfg.max_depth {
        Verdict::Accept(converged)
    } else {
        Verdict::Split(children)
    }
}

pub fn drive<R: RectRule>(rule: &R, root: Rectangle, cfg: &DriverConfig) -> Result<DriveOutcome<R::Estimate>> {
    let mut cost = Cost::default();
    let root_est = rule.estimate(root)?;
    cost.charge::<R>(&root_est);

    let (accepted, tree_cost) = if cfg.parallel && par::ENABLED {
        subtree(rule, root, 0, root_est, cfg)?
    } else {
        worklist(rule, root, root_est, cfg)?
    };
    cost.merge(tree_cost);

    let mut value = Complex64::new(0.0, 0.0);
    for acc in &accepted {
        value += R::value(&acc.estimate);
    }
    let depth_exceeded = accepted.iter().any(|a| !a.converged);
    Ok(DriveOutcome {
        value,
        accepted,
        rect_evals: cost.rect_evals,
        fevals: cost.fevals,
        subints: cost.subints,
        depth_exceeded,
    })
}

type Tree<E> = (Vec<Accepted<E>>, Cost);

fn worklist<R: RectRule>(rule: &R, root: Rectangle, root_est: R::Estimate, cfg: &DriverConfig) -> Result<Tree<R::Estimate>> {
    let mut cost = Cost::default();
    let mut accepted = Vec::new();
    let mut stack = vec![(root, 0usize, Some(root_est))];
    while let Some((rect, depth, memo)) = stack.pop() {
        let whole = match memo {
            Some(est) => est,
            None => {
                let est = rule.estimate(rect)?;
                cost.charge::<R>(&est);
                est
            }
        };
        let quads = rect.quadrants();
        let mut children = Vec::with_capacity(4);
        for q in quads {
            let est = rule.estimate(q)?;
            cost.charge::<R>(&est);
            children.push(est);
        }
        let children: [R::Estimate; 4] = children.try_into().ok().expect("four quadrants");
        match judge::<R>(&whole, children, depth, cfg) {
            Verdict::Accept(converged) => accepted.push(Accepted {
                rect,
                depth,
                estimate: whole,
                converged,
            }),
            Verdict::Split(children) => {
                for (q, est) in quads.into_iter().zip(children) {
                    stack.push((q, depth + 1, cfg.reuse_children.then_some(est)));
                }
            }
        }
    }
    Ok((accepted, cost))
}

fn subtree<R: RectRule>(rule: &R, rect: Rectangle, depth: usize, whole: R::Estimate, cfg: &DriverConfig) -> Result<Tree<R::Estimate>> {
    let mut cost = Cost::default();
    let quads = rect.quadrants();
    let [e1, e2, e3, e4] = par::join4(
        || rule.estimate(quads[0]),
        || rule.estimate(quads[1]),
        || rule.estimate(quads[2]),
        || rule.estimate(quads[3]),
    );
    let children = [e1?, e2?, e3?, e4?];
    for est in &children {
        cost.charge::<R>(est);
    }
    match judge::<R>(&whole, children, depth, cfg) {
        Verdict::Accept(converged) => Ok((
            vec![Accepted {
                rect,
                depth,
                estimate: whole,
                converged,
            }],
            cost,
        )),
        Verdict::Split(children) => {
            let [c1, c2, c3, c4] = children;
            let child = |q: Rectangle, est: R::Estimate| -> Result<Tree<R::Estimate>> {
                let (est, extra) = if cfg.reuse_children {
                    (est, Cost::default())
                } else {
                    let fresh = rule.estimate(q)?;
                    let mut c = Cost::default();
                    c.charge::<R>(&fresh);
                    (fresh, c)
                };
                let (acc, mut sub) = subtree(rule, q, depth + 1, est, cfg)?;
                sub.merge(extra);
                Ok((acc, sub))
            };
            let [t1, t2, t3, t4] = par::join4(
                || child(quads[0], c1),
                || child(quads[1], c2),
                || child(quads[2], c3),
                || child(quads[3], c4),
            );
            let mut accepted = Vec::new();
            // LIFO order: the last quadrant pushed is finished first
            for t in [t4?, t3?, t2?, t1?] {
                accepted.extend(t.0);
                cost.merge(t.1);
            }
            Ok((accepted, cost))
        }
    }
}

//! Measure sequences given by atom formulas in `n` (and an index `k`).

use std::sync::Arc;

use evalexpr::{build_operator_tree, ContextWithMutableVariables, HashMapContext, Node, Value};
use vague_core::convergence::MeasureSequence;
use vague_core::{DiscreteMeasure, Error, GroundSpace, LocallyFiniteMeasure, Point};

use crate::config::{AtomFormula, InlineSequence};
use crate::ConfigError;

/// Largest number of atoms one term may produce.
pub const MAX_TERM_ATOMS: usize = 1_000_000;

struct Compiled {
    x: Vec<Node>,
    w: Node,
    k_range: Option<[Node; 2]>,
}

fn compile(expr: &str, field: &str) -> Result<Node, ConfigError> {
    build_operator_tree(expr).map_err(|e| ConfigError(format!("field `{field}`: cannot parse `{expr}`: {e}")))
}

fn compile_atom(a: &AtomFormula, i: usize, dim: usize) -> Result<Compiled, ConfigError> {
    if a.x.len() != dim {
        return Err(ConfigError(format!(
            "field `sequence.inline.atoms[{i}].x`: expected {dim} coordinates, got {}",
            a.x.len()
        )));
    }
    let at = |f: &str| format!("sequence.inline.atoms[{i}].{f}");
    Ok(Compiled {
        x: a.x.iter().map(|e| compile(e, &at("x"))).collect::<Result<_, _>>()?,
        w: compile(&a.w, &at("w"))?,
        k_range: match &a.k_range {
            Some([lo, hi]) => Some([compile(lo, &at("k_range"))?, compile(hi, &at("k_range"))?]),
            None => None,
        },
    })
}

fn eval(node: &Node, ctx: &HashMapContext) -> vague_core::Result<f64> {
    node.eval_number_with_context(ctx)
        .map_err(|e| Error::InvalidArgument(format!("formula evaluation failed: {e}")))
}

fn context(n: u64, k: Option<i64>) -> HashMapContext {
    let mut ctx = HashMapContext::new();
    ctx.set_value("n".into(), Value::Float(n as f64)).expect("fresh variable");
    if let Some(k) = k {
        ctx.set_value("k".into(), Value::Float(k as f64)).expect("fresh variable");
    }
    ctx
}

fn term(space: GroundSpace, atoms: &[Compiled], n: u64) -> vague_core::Result<DiscreteMeasure> {
    let mut out: Vec<(Point, f64)> = Vec::new();
    let mut push = |c: &Compiled, ctx: &HashMapContext| -> vague_core::Result<()> {
        let w = eval(&c.w, ctx)?;
        // A zero weight drops the atom, which lets formulas switch atoms off.
        if w != 0.0 {
            let x = c.x.iter().map(|e| eval(e, ctx)).collect::<vague_core::Result<Vec<f64>>>()?;
            out.push((Point::new(x), w));
        }
        if out.len() > MAX_TERM_ATOMS {
            return Err(Error::SizeCap {
                count: out.len(),
                cap: MAX_TERM_ATOMS,
            });
        }
        Ok(())
    };
    for c in atoms {
        match &c.k_range {
            None => push(c, &context(n, None))?,
            Some([lo, hi]) => {
                let ctx = context(n, None);
                let (lo, hi) = (eval(lo, &ctx)?.ceil(), eval(hi, &ctx)?.floor());
                if hi - lo >= MAX_TERM_ATOMS as f64 {
                    return Err(Error::SizeCap {
                        count: (hi - lo) as usize,
                        cap: MAX_TERM_ATOMS,
                    });
                }
                let mut k = lo as i64;
                while k as f64 <= hi {
                    push(c, &context(n, Some(k)))?;
                    k += 1;
                }
            }
        }
    }
    DiscreteMeasure::new(space, out)
}

/// Builds the sequence. Formulas are parsed here, so syntax errors surface
/// before any computation.
pub fn inline_sequence(spec: &InlineSequence) -> Result<MeasureSequence, anyhow::Error> {
    let space = spec.space;
    let atoms: Vec<Compiled> = spec
        .atoms
        .iter()
        .enumerate()
        .map(|(i, a)| compile_atom(a, i, space.dim()))
        .collect::<Result<_, _>>()?;
    let limit_atoms = spec.limit.iter().map(|a| (Point::new(a.x.clone()), a.w)).collect();
    let limit = LocallyFiniteMeasure::from_finite(DiscreteMeasure::new(space, limit_atoms)?);
    let atoms = Arc::new(atoms);
    Ok(MeasureSequence::new("inline", limit, move |n| {
        Ok(LocallyFiniteMeasure::from_finite(term(space, &atoms, n)?))
    }))
}

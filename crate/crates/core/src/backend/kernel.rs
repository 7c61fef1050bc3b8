use std::sync::Arc;

use super::mapgen::Program;
use crate::kernels::BinaryOp;

/// What a compiled kernel computes.
#[derive(Clone, Debug)]
pub enum KernelBody {
    /// `out = a op b`, identical shapes.
    Elementwise(BinaryOp),
    /// `out = a op b` with `b` a column vector spread over `a`'s columns.
    Broadcast(BinaryOp),
    Matmul,
    /// `out = alpha * a`, with `alpha` passed as a scalar argument.
    Scale,
    Map { program: Arc<Program>, arity: usize },
}

/// A kernel as held in a context's cache.
#[derive(Debug)]
pub struct Kernel {
    pub(crate) name: String,
    pub(crate) source: String,
    pub(crate) body: KernelBody,
    pub(crate) context_id: u64,
}

impl Kernel {
    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn source(&self) -> &str {
        &self.source
    }

    pub fn body(&self) -> &KernelBody {
        &self.body
    }

    /// Number of matrix arguments.
    pub fn matrix_arity(&self) -> usize {
        match &self.body {
            KernelBody::Elementwise(_) | KernelBody::Broadcast(_) | KernelBody::Matmul => 2,
            KernelBody::Scale => 1,
            KernelBody::Map { arity, .. } => *arity,
        }
    }

    /// Number of scalar arguments.
    pub fn scalar_arity(&self) -> usize {
        match self.body {
            KernelBody::Scale => 1,
            _ => 0,
        }
    }

    /// Output shape for the given input shapes, or a description of the
    /// mismatch.
    pub(crate) fn output_shape(&self, shapes: &[(usize, usize)]) -> Result<(usize, usize), String> {
        match &self.body {
            KernelBody::Elementwise(_) | KernelBody::Map { .. } => {
                let first = shapes[0];
                match shapes.iter().find(|&&s| s != first) {
                    Some(s) => Err(format!("operand shapes differ: {first:?} vs {s:?}")),
                    None => Ok(first),
                }
            }
            KernelBody::Broadcast(_) => {
                let (a, b) = (shapes[0], shapes[1]);
                if b.1 == 1 && b.0 == a.0 {
                    Ok(a)
                } else {
                    Err(format!("cannot broadcast {b:?} over {a:?}"))
                }
            }
            KernelBody::Matmul => {
                let (a, b) = (shapes[0], shapes[1]);
                if a.1 == b.0 {
                    Ok((a.0, b.1))
                } else {
                    Err(format!("inner dimensions differ: {a:?} x {b:?}"))
                }
            }
            KernelBody::Scale => Ok(shapes[0]),
        }
    }
}

/// Built-in kernels compiled into every context at initialization.
pub(crate) fn builtin_sources() -> Vec<(String, KernelBody)> {
    let ops = [BinaryOp::Add, BinaryOp::Sub, BinaryOp::Mul, BinaryOp::Div];
    let mut out: Vec<(String, KernelBody)> = ops
        .iter()
        .map(|&op| (op.name().to_string(), KernelBody::Elementwise(op)))
        .collect();
    out.extend(
        ops.iter()
            .map(|&op| (format!("broadcast_{}", op.name()), KernelBody::Broadcast(op))),
    );
    out.push(("matmul".into(), KernelBody::Matmul));
    out.push(("scale".into(), KernelBody::Scale));
    out
}

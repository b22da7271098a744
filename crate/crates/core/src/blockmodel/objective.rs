//! Scalar pieces of the description-length objective. Natural logarithms
//! throughout; `0 ln 0` is taken as 0.

#[inline]
pub fn xlogx(x: f64) -> f64 {
    if x > 0.0 {
        x * x.ln()
    } else {
        0.0
    }
}

/// `h(x) = (1 + x) ln(1 + x) - x ln x`, with `h(0) = 0`.
#[inline]
pub fn h(x: f64) -> f64 {
    if x <= 0.0 {
        0.0
    } else {
        (1.0 + x) * (1.0 + x).ln() - x * x.ln()
    }
}

/// Model-complexity part of the description length:
/// `E h(C^2 / E) + V ln C`.
pub fn model_term(num_communities: usize, num_vertices: usize, num_edges: u64) -> f64 {
    let c = num_communities as f64;
    let edge_part = if num_edges == 0 {
        0.0
    } else {
        let e = num_edges as f64;
        e * h(c * c / e)
    };
    let vertex_part = if num_communities == 0 {
        0.0
    } else {
        num_vertices as f64 * c.ln()
    };
    edge_part + vertex_part
}

/// Description length of the one-community model: `E h(1/E) + E ln E`.
pub fn null_description_length(num_vertices: usize, num_edges: u64) -> f64 {
    let e = num_edges as f64;
    model_term(1, num_vertices, num_edges) + xlogx(e)
}

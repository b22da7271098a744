use crate::error::{Error, Result};

/// Which rank handles which vertices during MCMC, and which communities during merges.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct OwnershipSchedule {
    num_ranks: usize,
    owner: Vec<usize>,
    vertices: Vec<Vec<usize>>,
}

impl OwnershipSchedule {
    pub fn num_ranks(&self) -> usize {
        self.num_ranks
    }

    pub fn owner_of(&self, v: usize) -> usize {
        self.owner[v]
    }

    /// Vertices owned by `rank`, ascending.
    pub fn vertices(&self, rank: usize) -> &[usize] {
        &self.vertices[rank]
    }

    pub fn owns_community(&self, rank: usize, c: usize) -> bool {
        c % self.num_ranks == rank
    }
}

/// Sorts vertices by descending degree (ties by id) and deals sorted
/// position `p` to rank `r` iff `p mod 2N` is `r` or `2N - 1 - r`, so every
/// rank gets one high and one low vertex from each block of `2N`.
pub fn degree_balanced_schedule(degrees: &[u64], num_ranks: usize) -> Result<OwnershipSchedule> {
    if num_ranks == 0 {
        return Err(Error::Config("rank count must be at least 1".into()));
    }
    let mut order: Vec<usize> = (0..degrees.len()).collect();
    order.sort_unstable_by_key(|&v| (std::cmp::Reverse(degrees[v]), v));
    let period = 2 * num_ranks;
    let mut owner = vec![0usize; degrees.len()];
    let mut vertices = vec![Vec::new(); num_ranks];
    for (p, &v) in order.iter().enumerate() {
        let m = p % period;
        let r = if m < num_ranks { m } else { period - 1 - m };
        owner[v] = r;
        vertices[r].push(v);
    }
    for list in &mut vertices {
        list.sort_unstable();
    }
    Ok(OwnershipSchedule {
        num_ranks,
        owner,
        vertices,
    })
}

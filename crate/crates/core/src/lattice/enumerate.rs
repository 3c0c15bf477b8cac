//! Exhaustive enumeration oracles for tiny systems.

use super::{DimerCover, LatticeError, SpinConfig, SpinPairConfig, TorusLattice};

pub const MAX_ENUMERATION_VERTICES: usize = 36;
pub const MAX_SPIN_ENUMERATION_SITES: usize = 9;

/// All perfect matchings of a graph given by its edge list, as sorted lists of
/// edge indices. The lowest unmatched vertex is always matched next, trying its
/// edges in index order, so the output order is deterministic.
pub fn enumerate_perfect_matchings(
    num_vertices: usize,
    edges: &[(usize, usize)],
) -> Result<Vec<Vec<usize>>, LatticeError> {
    if num_vertices > MAX_ENUMERATION_VERTICES {
        return Err(LatticeError::SizeLimit {
            got: num_vertices,
            max: MAX_ENUMERATION_VERTICES,
        });
    }
    let mut adj = vec![Vec::new(); num_vertices];
    for (e, &(u, v)) in edges.iter().enumerate() {
        adj[u].push((e, v));
        adj[v].push((e, u));
    }
    let mut out = Vec::new();
    if num_vertices % 2 == 1 {
        return Ok(out);
    }
    let mut used = vec![false; num_vertices];
    let mut chosen = Vec::with_capacity(num_vertices / 2);
    backtrack(&adj, &mut used, &mut chosen, &mut out);
    Ok(out)
}

fn backtrack(
    adj: &[Vec<(usize, usize)>],
    used: &mut [bool],
    chosen: &mut Vec<usize>,
    out: &mut Vec<Vec<usize>>,
) {
    let Some(u) = used.iter().position(|&x| !x) else {
        let mut m = chosen.clone();
        m.sort_unstable();
        out.push(m);
        return;
    };
    used[u] = true;
    for &(e, v) in &adj[u] {
        if !used[v] {
            used[v] = true;
            chosen.push(e);
            backtrack(adj, used, chosen, out);
            chosen.pop();
            used[v] = false;
        }
    }
    used[u] = false;
}

/// Every dimer cover of a small torus, each exactly once.
pub fn enumerate_dimer_covers(lattice: &TorusLattice) -> Result<Vec<DimerCover>, LatticeError> {
    let edges: Vec<(usize, usize)> = (0..lattice.num_bonds())
        .map(|b| lattice.bond_endpoints(b))
        .collect();
    let matchings = enumerate_perfect_matchings(lattice.num_vertices(), &edges)?;
    Ok(matchings
        .into_iter()
        .map(|bonds| {
            let mut matched = vec![false; lattice.num_bonds()];
            for b in bonds {
                matched[b] = true;
            }
            DimerCover { matched }
        })
        .collect())
}

/// All `2^(L^2)` single-layer configurations; state `s` has spin `i` down
/// when bit `i` of `s` is set.
pub fn enumerate_single_spin_states(lattice: &TorusLattice) -> Result<Vec<SpinConfig>, LatticeError> {
    let n = lattice.num_vertices();
    if n > MAX_SPIN_ENUMERATION_SITES {
        return Err(LatticeError::SizeLimit {
            got: n,
            max: MAX_SPIN_ENUMERATION_SITES,
        });
    }
    Ok((0u64..1 << n)
        .map(|s| SpinConfig {
            values: bits_to_spins(s, n),
        })
        .collect())
}

/// All `2^(2 L^2)` configurations of two layers; bits `0..N` encode `sigma`
/// and bits `N..2N` encode `sigma_prime`.
pub fn enumerate_spin_states(lattice: &TorusLattice) -> Result<Vec<SpinPairConfig>, LatticeError> {
    let n = lattice.num_vertices();
    if n > MAX_SPIN_ENUMERATION_SITES {
        return Err(LatticeError::SizeLimit {
            got: n,
            max: MAX_SPIN_ENUMERATION_SITES,
        });
    }
    Ok((0u64..1 << (2 * n))
        .map(|s| SpinPairConfig::from_flat(&bits_to_spins(s, 2 * n)))
        .collect())
}

pub(crate) fn bits_to_spins(s: u64, n: usize) -> Vec<i8> {
    (0..n).map(|i| if s >> i & 1 == 1 { -1 } else { 1 }).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn spin_state_counts() {
        let t = TorusLattice::for_spins(2).unwrap();
        assert_eq!(enumerate_single_spin_states(&t).unwrap().len(), 16);
        assert_eq!(enumerate_spin_states(&t).unwrap().len(), 256);
        let t4 = TorusLattice::for_spins(4).unwrap();
        assert!(matches!(
            enumerate_spin_states(&t4),
            Err(LatticeError::SizeLimit { got: 16, max: 9 })
        ));
    }

    #[test]
    fn enumeration_size_limit() {
        let t = TorusLattice::build(8).unwrap();
        assert!(matches!(enumerate_dimer_covers(&t), Err(LatticeError::SizeLimit { .. })));
    }

    #[test]
    fn odd_graph_has_no_matching() {
        assert!(enumerate_perfect_matchings(3, &[(0, 1), (1, 2)]).unwrap().is_empty());
    }
}

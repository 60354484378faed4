//! Lower-triangular Hermite normal form for integer lattices given by a
//! generating set.

/// Canonical lower-triangular basis of the lattice spanned by `gens`.
///
/// Returned as columns: `basis[j][i]` is entry `(i, j)`, zero for `i < j`,
/// with a positive diagonal and `0 <= basis[j][i] < basis[i][i]` below it.
/// Panics if the generators do not span a full-rank lattice.
pub(crate) fn hermite_lower(gens: &[Vec<i64>], n: usize) -> Vec<Vec<i64>> {
    let mut rows: Vec<Vec<i64>> = gens.iter().filter(|g| g.iter().any(|&v| v != 0)).cloned().collect();
    let mut basis = Vec::with_capacity(n);
    for col in 0..n {
        let (mut piv, mut rest): (Vec<_>, Vec<_>) = rows.into_iter().partition(|r| r[col] != 0);
        // Euclid on the pivot column until one vector carries the gcd.
        while piv.len() > 1 {
            piv.sort_by_key(|r| r[col].abs());
            let p = piv[0].clone();
            let mut next = vec![p.clone()];
            for r in piv.into_iter().skip(1) {
                let q = r[col].div_euclid(p[col]);
                let r2: Vec<i64> = r.iter().zip(&p).map(|(a, b)| a - q * b).collect();
                if r2[col] != 0 {
                    next.push(r2);
                } else if r2.iter().any(|&v| v != 0) {
                    rest.push(r2);
                }
            }
            piv = next;
        }
        let mut p = piv.pop().expect("generators are rank deficient");
        if p[col] < 0 {
            p.iter_mut().for_each(|v| *v = -*v);
        }
        basis.push(p);
        rows = rest;
    }
    for j in 0..n {
        for i in j + 1..n {
            let q = basis[j][i].div_euclid(basis[i][i]);
            if q != 0 {
                let col_i = basis[i].clone();
                for (v, c) in basis[j].iter_mut().zip(&col_i) {
                    *v -= q * c;
                }
            }
        }
    }
    basis
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn checkerboard_lattice() {
        // D3 = { x in Z^3 : sum even }
        let gens = vec![vec![1, 1, 0], vec![0, 1, 1], vec![1, 0, 1], vec![2, 0, 0]];
        let b = hermite_lower(&gens, 3);
        assert_eq!(b, vec![vec![1, 0, 1], vec![0, 1, 1], vec![0, 0, 2]]);
    }

    #[test]
    fn already_triangular_is_reduced() {
        let gens = vec![vec![1, 5], vec![0, 3]];
        assert_eq!(hermite_lower(&gens, 2), vec![vec![1, 2], vec![0, 3]]);
    }
}

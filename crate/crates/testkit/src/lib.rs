//! Independent reference implementations ("oracles") and a deterministic RNG
//! shared by the test suites of the workspace crates.
//!
//! Everything here is deliberately written along a *different* algorithmic
//! route than the production code it checks: Floyd–Warshall instead of BFS,
//! winding numbers instead of even–odd ray casting, pivoted normal equations
//! instead of QR, and the finite trigonometric series for the Student-t tail
//! instead of the regularized incomplete beta. Keep it that way — an oracle
//! that shares code with the implementation proves nothing.

pub mod rng {
    /// SplitMix64: tiny, seedable, endianness-free. Good enough for fixtures,
    /// and it never changes behaviour underneath us the way an external RNG
    /// crate could across versions.
    #[derive(Debug, Clone)]
    pub struct Rng {
        state: u64,
    }

    impl Rng {
        pub fn new(seed: u64) -> Self {
            Rng { state: seed }
        }

        pub fn next_u64(&mut self) -> u64 {
            self.state = self.state.wrapping_add(0x9E37_79B9_7F4A_7C15);
            let mut z = self.state;
            z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
            z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
            z ^ (z >> 31)
        }

        /// Uniform in [0, 1).
        pub fn next_f64(&mut self) -> f64 {
            (self.next_u64() >> 11) as f64 / (1u64 << 53) as f64
        }

        /// Uniform in [lo, hi).
        pub fn range_f64(&mut self, lo: f64, hi: f64) -> f64 {
            lo + (hi - lo) * self.next_f64()
        }

        /// Uniform integer in [lo, hi).
        pub fn range_usize(&mut self, lo: usize, hi: usize) -> usize {
            assert!(lo < hi);
            lo + (self.next_u64() as usize) % (hi - lo)
        }

        /// Standard Box–Muller transform.
        pub fn normal(&mut self, mean: f64, sigma: f64) -> f64 {
            let u1 = 1.0 - self.next_f64(); // (0, 1]
            let u2 = self.next_f64();
            let mag = (-2.0 * u1.ln()).sqrt();
            mean + sigma * mag * (std::f64::consts::TAU * u2).cos()
        }

        /// Fisher–Yates shuffle.
        pub fn shuffle<T>(&mut self, items: &mut [T]) {
            for i in (1..items.len()).rev() {
                let j = self.range_usize(0, i + 1);
                items.swap(i, j);
            }
        }
    }
}

pub mod graph {
    /// All-pairs shortest paths on an unweighted undirected graph.
    /// `None` means unreachable.
    pub fn floyd_warshall(n: usize, edges: &[(usize, usize)]) -> Vec<Vec<Option<u64>>> {
        const INF: u64 = u64::MAX / 4;
        let mut dist = vec![vec![INF; n]; n];
        for (i, row) in dist.iter_mut().enumerate() {
            row[i] = 0;
        }
        for &(a, b) in edges {
            if a != b {
                dist[a][b] = dist[a][b].min(1);
                dist[b][a] = dist[b][a].min(1);
            }
        }
        for k in 0..n {
            for i in 0..n {
                for j in 0..n {
                    let through = dist[i][k] + dist[k][j];
                    if through < dist[i][j] {
                        dist[i][j] = through;
                    }
                }
            }
        }
        dist.into_iter()
            .map(|row| {
                row.into_iter()
                    .map(|d| if d >= INF { None } else { Some(d) })
                    .collect()
            })
            .collect()
    }
}

pub mod geometry {
    /// Winding-number point-in-polygon test (Sunday's algorithm) over one
    /// closed ring given as (x, y) vertices with first == last.
    pub fn winding_contains(ring: &[(f64, f64)], px: f64, py: f64) -> bool {
        let mut wn: i32 = 0;
        for w in ring.windows(2) {
            let (x1, y1) = w[0];
            let (x2, y2) = w[1];
            let is_left = (x2 - x1) * (py - y1) - (px - x1) * (y2 - y1);
            if y1 <= py {
                if y2 > py && is_left > 0.0 {
                    wn += 1;
                }
            } else if y2 <= py && is_left < 0.0 {
                wn -= 1;
            }
        }
        wn != 0
    }

    /// Distance from a point to a segment, for excluding near-boundary points
    /// from oracle comparisons.
    pub fn point_segment_distance(p: (f64, f64), a: (f64, f64), b: (f64, f64)) -> f64 {
        let (vx, vy) = (b.0 - a.0, b.1 - a.1);
        let (wx, wy) = (p.0 - a.0, p.1 - a.1);
        let len2 = vx * vx + vy * vy;
        let t = if len2 == 0.0 {
            0.0
        } else {
            ((wx * vx + wy * vy) / len2).clamp(0.0, 1.0)
        };
        let (dx, dy) = (p.0 - (a.0 + t * vx), p.1 - (a.1 + t * vy));
        (dx * dx + dy * dy).sqrt()
    }

    /// Minimum distance from a point to any edge of a ring.
    pub fn min_edge_distance(ring: &[(f64, f64)], px: f64, py: f64) -> f64 {
        ring.windows(2)
            .map(|w| point_segment_distance((px, py), w[0], w[1]))
            .fold(f64::INFINITY, f64::min)
    }
}

pub mod student_t {
    /// Exact two-sided p value for a t statistic with integer degrees of
    /// freedom, via the classical finite trigonometric series for the t
    /// distribution function (no gamma functions, no incomplete beta).
    pub fn two_sided_p(t: f64, df: usize) -> f64 {
        assert!(df >= 1, "degrees of freedom must be positive");
        if t.is_infinite() {
            return 0.0;
        }
        let t = t.abs();
        let nu = df as f64;
        let theta = (t / nu.sqrt()).atan();
        let (sin_t, cos_t) = (theta.sin(), theta.cos());
        let cos2 = cos_t * cos_t;
        // a = P(|T| <= t)
        let a = if df == 1 {
            2.0 * theta / std::f64::consts::PI
        } else if df % 2 == 1 {
            let mut term = cos_t;
            let mut sum = cos_t;
            for i in 1..=(df - 3) / 2 {
                term *= cos2 * (2 * i) as f64 / (2 * i + 1) as f64;
                sum += term;
            }
            2.0 / std::f64::consts::PI * (theta + sin_t * sum)
        } else {
            let mut term = 1.0;
            let mut sum = 1.0;
            for i in 1..=(df - 2) / 2 {
                term *= cos2 * (2 * i - 1) as f64 / (2 * i) as f64;
                sum += term;
            }
            sin_t * sum
        };
        (1.0 - a).clamp(0.0, 1.0)
    }
}

pub mod ols {
    use crate::student_t;

    #[derive(Debug, Clone)]
    pub struct OlsOracle {
        /// Intercept first, then one entry per regressor column.
        pub coefficients: Vec<f64>,
        pub std_errors: Vec<f64>,
        pub t_values: Vec<f64>,
        pub p_values: Vec<f64>,
        pub r_squared: f64,
    }

    /// Brute-force OLS through the normal equations: invert XᵀX with
    /// partially pivoted Gauss–Jordan elimination, no orthogonalization.
    pub fn normal_equations_fit(columns: &[Vec<f64>], response: &[f64]) -> OlsOracle {
        let n = response.len();
        let p = columns.len() + 1;
        assert!(n > p, "need more observations than parameters");
        let mut x = vec![vec![1.0; p]; n];
        for (j, col) in columns.iter().enumerate() {
            assert_eq!(col.len(), n);
            for i in 0..n {
                x[i][j + 1] = col[i];
            }
        }
        let mut xtx = vec![vec![0.0; p]; p];
        let mut xty = vec![0.0; p];
        for a in 0..p {
            for b in 0..p {
                xtx[a][b] = (0..n).map(|i| x[i][a] * x[i][b]).sum();
            }
            xty[a] = (0..n).map(|i| x[i][a] * response[i]).sum();
        }
        let inv = invert(&xtx).expect("oracle design must be well conditioned");
        let coefficients: Vec<f64> = (0..p)
            .map(|a| (0..p).map(|b| inv[a][b] * xty[b]).sum())
            .collect();

        let fitted: Vec<f64> = (0..n)
            .map(|i| (0..p).map(|a| x[i][a] * coefficients[a]).sum())
            .collect();
        let ss_res: f64 = (0..n).map(|i| (response[i] - fitted[i]).powi(2)).sum();
        let mean_y: f64 = response.iter().sum::<f64>() / n as f64;
        let ss_tot: f64 = response.iter().map(|y| (y - mean_y).powi(2)).sum();
        let df = n - p;
        let sigma2 = ss_res / df as f64;
        let std_errors: Vec<f64> = (0..p).map(|a| (sigma2 * inv[a][a]).sqrt()).collect();
        let t_values: Vec<f64> = (0..p)
            .map(|a| {
                if std_errors[a] > 0.0 {
                    coefficients[a] / std_errors[a]
                } else if coefficients[a] == 0.0 {
                    0.0
                } else {
                    f64::INFINITY.copysign(coefficients[a])
                }
            })
            .collect();
        let p_values: Vec<f64> = t_values
            .iter()
            .map(|&t| {
                if t == 0.0 && std_errors.contains(&0.0) {
                    1.0
                } else {
                    student_t::two_sided_p(t, df)
                }
            })
            .collect();
        OlsOracle {
            coefficients,
            std_errors,
            t_values,
            p_values,
            r_squared: 1.0 - ss_res / ss_tot,
        }
    }

    /// Gauss–Jordan matrix inverse with partial pivoting.
    pub fn invert(matrix: &[Vec<f64>]) -> Option<Vec<Vec<f64>>> {
        let n = matrix.len();
        let mut aug: Vec<Vec<f64>> = matrix
            .iter()
            .enumerate()
            .map(|(i, row)| {
                let mut r = row.clone();
                r.extend((0..n).map(|j| if i == j { 1.0 } else { 0.0 }));
                r
            })
            .collect();
        for col in 0..n {
            let pivot_row = (col..n).max_by(|&a, &b| {
                aug[a][col]
                    .abs()
                    .partial_cmp(&aug[b][col].abs())
                    .expect("pivot comparison")
            })?;
            if aug[pivot_row][col].abs() < 1e-12 {
                return None;
            }
            aug.swap(col, pivot_row);
            let pivot = aug[col][col];
            for v in aug[col].iter_mut() {
                *v /= pivot;
            }
            for row in 0..n {
                if row != col {
                    let factor = aug[row][col];
                    for k in 0..2 * n {
                        aug[row][k] -= factor * aug[col][k];
                    }
                }
            }
        }
        Some(aug.into_iter().map(|row| row[n..].to_vec()).collect())
    }
}

pub mod silhouette {
    /// Brute-force similarity-based silhouette over a dense similarity
    /// matrix: s(i) = (int - ext) / max(int, ext), `None` when the item is
    /// the only member of its cluster.
    pub fn scores(sim: &[Vec<f64>], labels: &[usize]) -> Vec<Option<f64>> {
        let n = labels.len();
        let mut clusters: std::collections::BTreeMap<usize, Vec<usize>> = Default::default();
        for (i, &c) in labels.iter().enumerate() {
            clusters.entry(c).or_default().push(i);
        }
        (0..n)
            .map(|i| {
                let own = &clusters[&labels[i]];
                if own.len() < 2 {
                    return None;
                }
                let internal: f64 = own
                    .iter()
                    .filter(|&&j| j != i)
                    .map(|&j| sim[i][j])
                    .sum::<f64>()
                    / (own.len() - 1) as f64;
                let external = clusters
                    .iter()
                    .filter(|(&c, _)| c != labels[i])
                    .map(|(_, members)| {
                        members.iter().map(|&j| sim[i][j]).sum::<f64>() / members.len() as f64
                    })
                    .fold(f64::NEG_INFINITY, f64::max);
                let denom = internal.max(external);
                Some(if denom == 0.0 {
                    0.0
                } else {
                    (internal - external) / denom
                })
            })
            .collect()
    }
}

pub mod stats {
    pub fn mean(values: &[f64]) -> f64 {
        values.iter().sum::<f64>() / values.len() as f64
    }

    pub fn population_std(values: &[f64]) -> f64 {
        let m = mean(values);
        (values.iter().map(|v| (v - m).powi(2)).sum::<f64>() / values.len() as f64).sqrt()
    }

    pub fn median(values: &[f64]) -> f64 {
        let mut v = values.to_vec();
        v.sort_by(|a, b| a.partial_cmp(b).expect("median of non-finite values"));
        let n = v.len();
        if n % 2 == 1 {
            v[n / 2]
        } else {
            (v[n / 2 - 1] + v[n / 2]) / 2.0
        }
    }
}

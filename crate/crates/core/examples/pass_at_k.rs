//! Unbiased pass@k for a few (n, c) pairs.

use cfsc::metrics::pass_at_k;

fn main() {
    println!("  n   c   k  pass@k");
    for (n, c) in [(5, 0), (5, 1), (5, 2), (10, 3), (20, 10), (100, 1)] {
        for k in [1, 5, 10] {
            match pass_at_k(n, c, k) {
                Ok(v) => println!("{n:>3} {c:>3} {k:>3}  {v:.4}"),
                Err(e) => println!("{n:>3} {c:>3} {k:>3}  ({e})"),
            }
        }
    }
}

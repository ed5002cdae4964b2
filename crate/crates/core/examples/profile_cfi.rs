use dihedra::normal_form::*;
use dihedra::structure::{Relation, Structure};

fn main() {
    let subsets: [[usize; 3]; 4] = [[0, 0, 0], [1, 1, 0], [1, 0, 1], [0, 1, 1]];
    let mut edges = Vec::new();
    for (v, bits) in subsets.iter().enumerate() {
        for (i, &b) in bits.iter().enumerate() {
            edges.push(vec![6 + v, 2 * i + b]);
        }
    }
    let h = Structure::new(
        vec![0, 0, 1, 1, 2, 2, 3, 3, 3, 3],
        vec![Relation::new("e", 2, edges)],
    )
    .unwrap();
    let t0 = std::time::Instant::now();
    let t1 = reduce_transitive(&h).unwrap();
    eprintln!("transitive: {:?} n={} k={}", t0.elapsed(), t1.output.n, t1.output.class_count());
    let t0 = std::time::Instant::now();
    let t2 = reduce_typed(&t1.output).unwrap();
    eprintln!("typed: {:?} n={} k={}", t0.elapsed(), t2.output.n, t2.output.class_count());
    let t0 = std::time::Instant::now();
    let t3 = reduce_regular(&t2.output).unwrap();
    eprintln!("regular: {:?} n={} k={}", t0.elapsed(), t3.output.n, t3.output.class_count());
    let t0 = std::time::Instant::now();
    let t4 = reduce_arity(&t3.output).unwrap();
    eprintln!("arity: {:?} n={} k={}", t0.elapsed(), t4.output.n, t4.output.class_count());
    let t0 = std::time::Instant::now();
    let t5 = reduce_2inj(&t4.output).unwrap();
    eprintln!("twoinj: {:?} n={} k={}", t0.elapsed(), t5.structure.n, t5.structure.class_count());
}

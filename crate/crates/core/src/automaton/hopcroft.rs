//! Hopcroft partition refinement on a complete table.

/// Returns the class of every state and the number of classes. Class ids are
/// assigned in order of first appearance over the state index.
pub(crate) fn partition(delta: &[Vec<usize>], accepting: &[bool], n_symbols: usize) -> (Vec<usize>, usize) {
    let n = delta.len();
    if n == 0 {
        return (Vec::new(), 0);
    }
    let mut inv: Vec<Vec<Vec<usize>>> = vec![vec![Vec::new(); n]; n_symbols];
    for (p, row) in delta.iter().enumerate() {
        for (c, &q) in row.iter().enumerate() {
            inv[c][q].push(p);
        }
    }
    let acc: Vec<usize> = (0..n).filter(|&q| accepting[q]).collect();
    let rej: Vec<usize> = (0..n).filter(|&q| !accepting[q]).collect();
    let mut blocks: Vec<Vec<usize>> = [acc, rej].into_iter().filter(|b| !b.is_empty()).collect();
    let mut block_of = vec![0usize; n];
    for (b, members) in blocks.iter().enumerate() {
        for &q in members {
            block_of[q] = b;
        }
    }
    let mut in_work = vec![false; blocks.len()];
    let mut work = Vec::new();
    if blocks.len() == 2 {
        let smaller = if blocks[0].len() <= blocks[1].len() { 0 } else { 1 };
        work.push(smaller);
        in_work[smaller] = true;
    }
    let mut mark = vec![false; n];
    while let Some(a) = work.pop() {
        in_work[a] = false;
        let splitter = blocks[a].clone();
        for inv_c in &inv {
            let mut x: Vec<usize> = Vec::new();
            for &q in &splitter {
                for &p in &inv_c[q] {
                    if !mark[p] {
                        mark[p] = true;
                        x.push(p);
                    }
                }
            }
            let mut touched: Vec<usize> = x.iter().map(|&p| block_of[p]).collect();
            touched.sort_unstable();
            touched.dedup();
            for y in touched {
                let (inside, outside): (Vec<usize>, Vec<usize>) = blocks[y].iter().partition(|&&q| mark[q]);
                if outside.is_empty() {
                    continue;
                }
                let (keep, split) = if inside.len() >= outside.len() { (inside, outside) } else { (outside, inside) };
                let id = blocks.len();
                for &q in &split {
                    block_of[q] = id;
                }
                blocks[y] = keep;
                blocks.push(split);
                in_work.push(true);
                work.push(id);
            }
            for p in x {
                mark[p] = false;
            }
        }
    }
    // renumber by first appearance
    let mut remap = vec![usize::MAX; blocks.len()];
    let mut next = 0;
    let mut class_of = vec![0usize; n];
    for q in 0..n {
        let b = block_of[q];
        if remap[b] == usize::MAX {
            remap[b] = next;
            next += 1;
        }
        class_of[q] = remap[b];
    }
    (class_of, next)
}

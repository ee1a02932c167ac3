//! Small graph helpers shared by the engines.

/// Strongly connected components in reverse topological order (every edge
/// leaves a later component). Iterative Tarjan.
pub fn sccs_reverse_topological(n: usize, succ: &[Vec<usize>]) -> Vec<Vec<usize>> {
    let mut index = vec![usize::MAX; n];
    let mut low = vec![0usize; n];
    let mut on_stack = vec![false; n];
    let mut stack: Vec<usize> = Vec::new();
    let mut next_index = 0;
    let mut comps: Vec<Vec<usize>> = Vec::new();
    let mut work: Vec<(usize, usize)> = Vec::new();
    for root in 0..n {
        if index[root] != usize::MAX {
            continue;
        }
        work.push((root, 0));
        while let Some(&mut (v, ref mut ei)) = work.last_mut() {
            if *ei == 0 {
                index[v] = next_index;
                low[v] = next_index;
                next_index += 1;
                stack.push(v);
                on_stack[v] = true;
            }
            if let Some(&w) = succ[v].get(*ei) {
                *ei += 1;
                if index[w] == usize::MAX {
                    work.push((w, 0));
                } else if on_stack[w] {
                    low[v] = low[v].min(index[w]);
                }
            } else {
                if low[v] == index[v] {
                    let mut comp = Vec::new();
                    while let Some(w) = stack.pop() {
                        on_stack[w] = false;
                        comp.push(w);
                        if w == v {
                            break;
                        }
                    }
                    comp.sort();
                    comps.push(comp);
                }
                let done = v;
                work.pop();
                if let Some(&mut (u, _)) = work.last_mut() {
                    low[u] = low[u].min(low[done]);
                }
            }
        }
    }
    comps
}

/// Vertices lying on some cycle of the graph (in a component of size two
/// or more, or carrying a self-loop).
pub fn on_cycle(n: usize, succ: &[Vec<usize>]) -> Vec<bool> {
    let mut out = vec![false; n];
    for comp in sccs_reverse_topological(n, succ) {
        if comp.len() > 1 {
            for v in comp {
                out[v] = true;
            }
        } else {
            let v = comp[0];
            if succ[v].contains(&v) {
                out[v] = true;
            }
        }
    }
    out
}

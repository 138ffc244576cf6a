use std::cmp::Ordering;

/// Objective pair (both minimised) and aggregate constraint violation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Fitness {
    pub objectives: [f64; 2],
    pub violation: f64,
}

impl Fitness {
    pub fn new(f1: f64, f2: f64, violation: f64) -> Self {
        Fitness {
            objectives: [f1, f2],
            violation,
        }
    }

    pub fn is_feasible(&self) -> bool {
        self.violation <= 0.0
    }
}

/// Pareto dominance on objectives alone.
pub fn pareto_dominates(a: &[f64; 2], b: &[f64; 2]) -> bool {
    a[0] <= b[0] && a[1] <= b[1] && (a[0] < b[0] || a[1] < b[1])
}

/// Constrained domination: feasibility first, then lower violation, then
/// Pareto dominance between feasible points.
pub fn dominates(a: &Fitness, b: &Fitness) -> bool {
    match (a.is_feasible(), b.is_feasible()) {
        (true, false) => true,
        (false, true) => false,
        (false, false) => a.violation < b.violation,
        (true, true) => pareto_dominates(&a.objectives, &b.objectives),
    }
}

/// Splits `pop` into successive non-dominated fronts of indices.
pub fn fast_nondominated_sort(pop: &[Fitness]) -> Vec<Vec<usize>> {
    let n = pop.len();
    let mut dominated_by: Vec<Vec<usize>> = vec![Vec::new(); n];
    let mut counts = vec![0usize; n];
    for i in 0..n {
        for j in i + 1..n {
            if dominates(&pop[i], &pop[j]) {
                dominated_by[i].push(j);
                counts[j] += 1;
            } else if dominates(&pop[j], &pop[i]) {
                dominated_by[j].push(i);
                counts[i] += 1;
            }
        }
    }
    let mut fronts = Vec::new();
    let mut current: Vec<usize> = (0..n).filter(|&i| counts[i] == 0).collect();
    while !current.is_empty() {
        let mut next = Vec::new();
        for &i in &current {
            for &j in &dominated_by[i] {
                counts[j] -= 1;
                if counts[j] == 0 {
                    next.push(j);
                }
            }
        }
        next.sort_unstable();
        fronts.push(std::mem::replace(&mut current, next));
    }
    fronts
}

/// Crowding distance of each member of `front`, in the same order.
///
/// Extremes of each objective are infinite; an objective with zero range
/// adds nothing to interior members.
pub fn crowding_distance(pop: &[Fitness], front: &[usize]) -> Vec<f64> {
    let m = front.len();
    let mut dist = vec![0.0; m];
    if m <= 2 {
        return vec![f64::INFINITY; m];
    }
    for obj in 0..2 {
        let mut order: Vec<usize> = (0..m).collect();
        order.sort_by(|&a, &b| {
            pop[front[a]].objectives[obj]
                .partial_cmp(&pop[front[b]].objectives[obj])
                .unwrap_or(Ordering::Equal)
                .then(a.cmp(&b))
        });
        let value = |k: usize| pop[front[order[k]]].objectives[obj];
        let range = value(m - 1) - value(0);
        dist[order[0]] = f64::INFINITY;
        dist[order[m - 1]] = f64::INFINITY;
        if range > 0.0 {
            for k in 1..m - 1 {
                dist[order[k]] += (value(k + 1) - value(k - 1)) / range;
            }
        }
    }
    dist
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn domination_examples() {
        let f = Fitness::new;
        assert!(dominates(&f(1.0, 1.0, 0.0), &f(2.0, 2.0, 0.0)));
        assert!(!dominates(&f(1.0, 2.0, 0.0), &f(2.0, 1.0, 0.0)));
        assert!(!dominates(&f(2.0, 1.0, 0.0), &f(1.0, 2.0, 0.0)));
        assert!(dominates(&f(9.0, 9.0, 0.0), &f(1.0, 1.0, 5.0)));
        assert!(dominates(&f(9.0, 9.0, 1.0), &f(1.0, 1.0, 5.0)));
        assert!(!dominates(&f(1.0, 1.0, 0.0), &f(1.0, 1.0, 0.0)));
    }

    #[test]
    fn identical_and_chain() {
        let same = vec![Fitness::new(1.0, 1.0, 0.0); 4];
        assert_eq!(fast_nondominated_sort(&same), vec![vec![0, 1, 2, 3]]);
        let chain = vec![Fitness::new(3.0, 3.0, 0.0), Fitness::new(1.0, 1.0, 0.0), Fitness::new(2.0, 2.0, 0.0)];
        assert_eq!(fast_nondominated_sort(&chain), vec![vec![1], vec![2], vec![0]]);
    }

    #[test]
    fn crowding_rules() {
        let pop = vec![Fitness::new(0.0, 2.0, 0.0), Fitness::new(1.0, 1.0, 0.0), Fitness::new(2.0, 0.0, 0.0)];
        let d = crowding_distance(&pop, &[0, 1, 2]);
        assert_eq!(d, vec![f64::INFINITY, 2.0, f64::INFINITY]);
        assert_eq!(crowding_distance(&pop, &[0, 2]), vec![f64::INFINITY; 2]);
        let same = vec![Fitness::new(1.0, 1.0, 0.0); 5];
        let d = crowding_distance(&same, &[0, 1, 2, 3, 4]);
        assert!(d[0].is_infinite() && d[4].is_infinite());
        assert_eq!(&d[1..4], &[0.0, 0.0, 0.0]);
    }
}

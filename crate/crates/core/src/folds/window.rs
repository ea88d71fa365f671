use std::fmt;

use serde::Serialize;

use super::AllocationError;

/// Cyclic run of `width` consecutive folds starting at `start`, modulo `k`.
///
/// Empty and full windows are stored with `start = 0` so that equal fold sets
/// compare equal.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct Window {
    start: usize,
    width: usize,
    k: usize,
}

impl Window {
    /// # Panics
    /// If `k == 0` or `width > k`.
    pub fn new(start: usize, width: usize, k: usize) -> Self {
        assert!(k > 0 && width <= k, "window of width {width} with K = {k}");
        let start = if width == 0 || width == k { 0 } else { start % k };
        Self { start, width, k }
    }

    pub fn start(&self) -> usize {
        self.start
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn k(&self) -> usize {
        self.k
    }

    /// Member folds in cyclic order from `start`.
    pub fn folds(&self) -> Vec<usize> {
        (0..self.width).map(|i| (self.start + i) % self.k).collect()
    }

    pub fn contains(&self, fold: usize) -> bool {
        (fold % self.k + self.k - self.start) % self.k < self.width
    }

    pub fn intersects(&self, other: &Window) -> bool {
        other.folds().into_iter().any(|f| self.contains(f))
    }

    pub fn shifted(&self, by: usize) -> Window {
        Window::new(self.start + by, self.width, self.k)
    }
}

impl fmt::Display for Window {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let folds: Vec<String> = self.folds().iter().map(usize::to_string).collect();
        write!(f, "{{{}}}", folds.join(","))
    }
}

/// Evaluation window of panel `p`.
pub fn panel_eval_window(p: usize, eval_fold: usize, k: usize) -> Result<Window, AllocationError> {
    if p >= k {
        return Err(AllocationError::PanelOutOfRange { p, k });
    }
    if eval_fold >= k {
        return Err(AllocationError::EvalTooWide { eval_fold, k });
    }
    Ok(Window::new(p, eval_fold, k))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn eval_windows() {
        assert_eq!(panel_eval_window(0, 1, 5).unwrap().folds(), vec![0]);
        assert_eq!(panel_eval_window(4, 2, 5).unwrap().folds(), vec![4, 0]);
        assert!(panel_eval_window(2, 0, 5).unwrap().folds().is_empty());
        assert!(panel_eval_window(5, 1, 5).is_err());
    }

    #[test]
    fn membership_and_display() {
        let w = Window::new(4, 2, 5);
        assert!(w.contains(4) && w.contains(0) && !w.contains(1));
        assert_eq!(w.to_string(), "{4,0}");
        assert!(w.intersects(&Window::new(0, 1, 5)));
        assert!(!w.intersects(&Window::new(1, 3, 5)));
        assert_eq!(Window::new(3, 5, 5), Window::new(0, 5, 5));
        assert_eq!(w.shifted(2), Window::new(1, 2, 5));
    }
}

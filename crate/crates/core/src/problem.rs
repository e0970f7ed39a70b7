/// A query problem: a total relation between `{0,1}^k` and the labels
/// `0..alphabet_size()`. Boolean functions are the special case with two labels
/// and exactly one accepted label per input.
pub trait QueryProblem: Sync {
    fn arity(&self) -> usize;

    fn alphabet_size(&self) -> usize;

    /// Bit `r` is set iff `(x, r)` is accepted. `x` must be in range.
    fn accepted_mask(&self, x: u64) -> u64;

    fn accepts(&self, x: u64, label: usize) -> bool {
        label < 64 && (self.accepted_mask(x) >> label) & 1 == 1
    }
}

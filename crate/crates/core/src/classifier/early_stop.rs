/// Early stopping on evaluation loss.
///
/// Returns `true` when each of the last `patience` epoch-over-epoch
/// decreases is at most `delta`. A loss increase counts as a non-improving
/// epoch. With `patience` or fewer recorded losses there is not enough
/// history and the answer is `false`.
pub fn should_stop(eval_losses: &[f64], delta: f64, patience: usize) -> bool {
    if patience == 0 || eval_losses.len() <= patience {
        return false;
    }
    eval_losses
        .windows(2)
        .rev()
        .take(patience)
        .all(|w| w[0] - w[1] <= delta)
}

use std::f64::consts::PI;

/// Cosine decay from `base_lr` at step 0 to zero at `total_steps`.
pub fn cosine_lr(base_lr: f64, step: usize, total_steps: usize) -> f64 {
    if total_steps == 0 {
        return base_lr;
    }
    let progress = step.min(total_steps) as f64 / total_steps as f64;
    0.5 * base_lr * (1.0 + (PI * progress).cos())
}

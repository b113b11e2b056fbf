use super::{accumulated_phase, ModelParams};
use crate::scalar::{Real, C};

/// `e^{-Gamma (t - t')} e^{-i f_k(t, t')}`.
fn propagator<T: Real>(p: &ModelParams<T>, t: T, t_prime: T) -> C<T> {
    let f = accumulated_phase(p, t, t_prime);
    let decay = (-(p.gamma * (t - t_prime))).exp();
    C::new(f.cos() * decay, -(f.sin() * decay))
}

/// `G^<(t, t') = i n(t') e^{-Gamma (t - t')} e^{-i f_k}`.
pub fn green_lesser<T: Real>(p: &ModelParams<T>, t: T, t_prime: T, n_ref: T) -> C<T> {
    propagator(p, t, t_prime) * C::new(T::zero(), n_ref)
}

/// `G^>(t, t') = -i (1 - n(t')) e^{-Gamma (t - t')} e^{-i f_k}`.
pub fn green_greater<T: Real>(p: &ModelParams<T>, t: T, t_prime: T, n_ref: T) -> C<T> {
    propagator(p, t, t_prime) * C::new(T::zero(), -(T::one() - n_ref))
}

/// `G^R(t, t') = theta(t - t') (G^> - G^<)` with `theta(0) = 1`.
pub fn green_retarded<T: Real>(p: &ModelParams<T>, t: T, t_prime: T) -> C<T> {
    if t < t_prime {
        return C::new(T::zero(), T::zero());
    }
    propagator(p, t, t_prime) * C::new(T::zero(), -T::one())
}

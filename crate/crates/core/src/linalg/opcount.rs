//! Multiply-add counter for the triangular kernels used by ICF.
//!
//! Only active with `debug_assertions`; release builds compile `add` to
//! nothing and `take` always returns 0.

#[cfg(debug_assertions)]
thread_local! {
    static COUNT: std::cell::Cell<u64> = const { std::cell::Cell::new(0) };
}

#[inline(always)]
pub fn add(_n: u64) {
    #[cfg(debug_assertions)]
    COUNT.with(|c| c.set(c.get() + _n));
}

/// Return the count accumulated on this thread and reset it.
pub fn take() -> u64 {
    #[cfg(debug_assertions)]
    {
        COUNT.with(|c| c.replace(0))
    }
    #[cfg(not(debug_assertions))]
    {
        0
    }
}

pub fn enabled() -> bool {
    cfg!(debug_assertions)
}

use std::sync::{Arc, Condvar, Mutex};
use std::time::Duration;

use super::GraphError;

type Callback<T> = Box<dyn FnOnce(&Result<T, GraphError>) + Send>;

struct State<T> {
    result: Option<Result<T, GraphError>>,
    callbacks: Vec<Callback<T>>,
}

/// A deferred result settled once, possibly on another thread.
pub struct Completion<T> {
    inner: Arc<(Mutex<State<T>>, Condvar)>,
}

/// Settles when the receiving node has finished with a pushed frame. It says
/// nothing about how far the frame travelled beyond that node.
pub type PushCompletion = Completion<()>;

/// Settles with the number of frames sources produced in answer to a pull.
pub type PullCompletion = Completion<usize>;

impl<T> Clone for Completion<T> {
    fn clone(&self) -> Self {
        Self {
            inner: Arc::clone(&self.inner),
        }
    }
}

impl<T> std::fmt::Debug for Completion<T> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let settled = self
            .inner
            .0
            .lock()
            .map(|s| s.result.is_some())
            .unwrap_or(false);
        f.debug_struct("Completion")
            .field("settled", &settled)
            .finish()
    }
}

impl<T: Clone + Send + 'static> Default for Completion<T> {
    fn default() -> Self {
        Self::pending()
    }
}

impl<T: Clone + Send + 'static> Completion<T> {
    pub fn pending() -> Self {
        Self {
            inner: Arc::new((
                Mutex::new(State {
                    result: None,
                    callbacks: Vec::new(),
                }),
                Condvar::new(),
            )),
        }
    }

    pub fn resolved(value: T) -> Self {
        let c = Self::pending();
        c.settle(Ok(value));
        c
    }

    pub fn rejected(error: GraphError) -> Self {
        let c = Self::pending();
        c.settle(Err(error));
        c
    }

    /// Settles the completion. Only the first call has an effect.
    pub fn settle(&self, result: Result<T, GraphError>) -> bool {
        let callbacks = {
            let mut s = self.inner.0.lock().unwrap_or_else(|e| e.into_inner());
            if s.result.is_some() {
                return false;
            }
            s.result = Some(result.clone());
            std::mem::take(&mut s.callbacks)
        };
        self.inner.1.notify_all();
        for cb in callbacks {
            cb(&result);
        }
        true
    }

    pub fn resolve(&self, value: T) -> bool {
        self.settle(Ok(value))
    }

    pub fn reject(&self, error: GraphError) -> bool {
        self.settle(Err(error))
    }

    pub fn is_settled(&self) -> bool {
        self.try_get().is_some()
    }

    pub fn try_get(&self) -> Option<Result<T, GraphError>> {
        self.inner
            .0
            .lock()
            .unwrap_or_else(|e| e.into_inner())
            .result
            .clone()
    }

    pub fn wait(&self) -> Result<T, GraphError> {
        let mut s = self.inner.0.lock().unwrap_or_else(|e| e.into_inner());
        loop {
            if let Some(r) = &s.result {
                return r.clone();
            }
            s = self.inner.1.wait(s).unwrap_or_else(|e| e.into_inner());
        }
    }

    pub fn wait_timeout(&self, timeout: Duration) -> Option<Result<T, GraphError>> {
        let s = self.inner.0.lock().unwrap_or_else(|e| e.into_inner());
        let (s, _) = self
            .inner
            .1
            .wait_timeout_while(s, timeout, |s| s.result.is_none())
            .unwrap_or_else(|e| e.into_inner());
        s.result.clone()
    }

    /// Runs `f` once settled; immediately if already settled.
    pub fn on_settle(&self, f: impl FnOnce(&Result<T, GraphError>) + Send + 'static) {
        let ready = {
            let mut s = self.inner.0.lock().unwrap_or_else(|e| e.into_inner());
            match &s.result {
                Some(r) => Some(r.clone()),
                None => {
                    s.callbacks.push(Box::new(f));
                    return;
                }
            }
        };
        if let Some(r) = ready {
            f(&r);
        }
    }
}

impl Completion<()> {
    /// Resolves when every part resolves; rejects with the first rejection.
    pub fn all(parts: Vec<Completion<()>>) -> Completion<()> {
        if parts.is_empty() {
            return Completion::resolved(());
        }
        let joined = Completion::pending();
        let remaining = Arc::new(Mutex::new(parts.len()));
        for part in parts {
            let joined = joined.clone();
            let remaining = Arc::clone(&remaining);
            part.on_settle(move |r| match r {
                Err(e) => {
                    joined.reject(e.clone());
                }
                Ok(()) => {
                    let mut n = remaining.lock().unwrap_or_else(|e| e.into_inner());
                    *n -= 1;
                    if *n == 0 {
                        joined.resolve(());
                    }
                }
            });
        }
        joined
    }
}

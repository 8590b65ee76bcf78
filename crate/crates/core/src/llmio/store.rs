use std::path::PathBuf;

use super::activations::{
    activation_cache_load, activation_cache_store, activation_path, ActivationError,
    ActivationMatrix,
};
use super::client::{Provider, ProviderError};
use crate::instances::ProblemKind;
use crate::render::Rendering;

#[derive(Debug, thiserror::Error)]
pub enum FetchError {
    #[error(transparent)]
    Activation(#[from] ActivationError),
    #[error(transparent)]
    Provider(#[from] ProviderError),
}

/// Where activations come from: an offline directory, a live provider, or a
/// provider whose answers are cached into the directory.
pub struct ActivationStore<'a> {
    dir: Option<PathBuf>,
    provider: Option<&'a dyn Provider>,
    expected_dim: Option<usize>,
}

impl<'a> ActivationStore<'a> {
    pub fn new(
        dir: Option<PathBuf>,
        provider: Option<&'a dyn Provider>,
        expected_dim: Option<usize>,
    ) -> Self {
        ActivationStore {
            dir,
            provider,
            expected_dim,
        }
    }

    /// Loads the cached matrix if present, otherwise asks the provider and
    /// caches the answer. Checks token count and width.
    pub fn fetch_activations(
        &self,
        problem: ProblemKind,
        rendering: &Rendering,
    ) -> Result<ActivationMatrix, FetchError> {
        let path = self.dir.as_ref().map(|d| {
            activation_path(
                d,
                problem,
                rendering.representation,
                &rendering.instance_name,
            )
        });
        let m = match (&path, self.provider) {
            (Some(p), _) if p.exists() => activation_cache_load(p)?,
            (Some(p), Some(provider)) => {
                let m = provider.hidden_states(rendering)?;
                m.check(self.expected_dim)?;
                activation_cache_store(p, &m)?;
                m
            }
            (None, Some(provider)) => provider.hidden_states(rendering)?,
            (Some(p), None) => return Err(ActivationError::MissingOffline(p.clone()).into()),
            (None, None) => return Err(ProviderError::Unsupported.into()),
        };
        m.check(self.expected_dim)?;
        Ok(m)
    }
}

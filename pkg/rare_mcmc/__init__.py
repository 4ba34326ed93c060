# rare_mcmc - Gibbs-sampler estimators for heavy-tailed rare events
__version__ = "1.0.0"

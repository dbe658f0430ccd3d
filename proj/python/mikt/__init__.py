"""Python access to the coupled-network transfer learner."""

from ._mikt import (
    ConfigError,
    Env,
    MissingTeacherError,
    UnknownEnvError,
    cli,
    default_config,
    env_dims,
    gae,
    list_envs,
    read_metrics,
    train,
)

__all__ = [
    "ConfigError",
    "Env",
    "MissingTeacherError",
    "UnknownEnvError",
    "cli",
    "default_config",
    "env_dims",
    "gae",
    "list_envs",
    "read_metrics",
    "train",
]

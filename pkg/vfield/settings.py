"""
Django settings for the vfield project.

The project has no web surface: Django provides configuration, the ORM for the optional event
store, management commands and the test runner. Figures are drawn with matplotlib.
"""

import os
from pathlib import Path

# Build paths inside the project like this: BASE_DIR / 'subdir'.
BASE_DIR = Path(__file__).resolve().parent.parent


# SECURITY WARNING: keep the secret key used in production secret!
SECRET_KEY = os.environ.get(
    "DJANGO_SECRET_KEY", "django-insecure-v7#q2p!m0w8z@d1r6k^x4c$e9h_t3yj5f&n+b-l=s0g*ua"
)

DEBUG = os.environ.get("DJANGO_DEBUG", "0") == "1"

ALLOWED_HOSTS = []


# Application definition

INSTALLED_APPS = [
    "django.contrib.auth",
    "django.contrib.contenttypes",
    "rest_framework",
    "vfield_app",
]

# Database
# SQLite by default; set VFIELD_DB_ENGINE=postgresql to store scan events in PostgreSQL.

if os.environ.get("VFIELD_DB_ENGINE") == "postgresql":
    DATABASES = {
        "default": {
            "ENGINE": "django.db.backends.postgresql",
            "NAME": os.environ.get("VFIELD_DB_NAME", "vfield_db"),
            "USER": os.environ.get("VFIELD_DB_USER", "vfield"),
            "PASSWORD": os.environ.get("VFIELD_DB_PASSWORD", ""),
            "HOST": os.environ.get("VFIELD_DB_HOST", "127.0.0.1"),
            "PORT": os.environ.get("VFIELD_DB_PORT", "5432"),
        }
    }
else:
    DATABASES = {
        "default": {
            "ENGINE": "django.db.backends.sqlite3",
            "NAME": os.environ.get("VFIELD_DB_PATH", str(BASE_DIR / "vfield.sqlite3")),
        }
    }


# Internationalization

LANGUAGE_CODE = "en-us"

TIME_ZONE = "UTC"

USE_I18N = False

USE_TZ = True


DEFAULT_AUTO_FIELD = "django.db.models.BigAutoField"

REST_FRAMEWORK = {
    "DEFAULT_RENDERER_CLASSES": ("rest_framework.renderers.JSONRenderer",),
    "DEFAULT_PARSER_CLASSES": ("rest_framework.parsers.JSONParser",),
    "COERCE_DECIMAL_TO_STRING": False,
}


# Logging

LOGGING = {
    "version": 1,
    "disable_existing_loggers": False,
    "formatters": {
        "plain": {"format": "%(asctime)s %(levelname)s %(name)s: %(message)s"},
    },
    "handlers": {
        "console": {"class": "logging.StreamHandler", "formatter": "plain"},
    },
    "loggers": {
        "vfield_app": {
            "handlers": ["console"],
            "level": os.environ.get("VFIELD_LOG_LEVEL", "WARNING"),
            "propagate": False,
        },
    },
}


# Numerics
# Overrides for vfield_app.conf.Numerics; anything missing falls back to the dataclass defaults.

VFIELD = {
    "rtol": 1e-10,
    "atol": 1e-12,
    "ray_count": 64,
    "bisect_tol": 1e-10,
    "confirm_returns": 3,
}

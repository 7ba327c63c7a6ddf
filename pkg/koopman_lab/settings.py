from pathlib import Path
from decouple import config

# Build paths inside the project like this: BASE_DIR / 'subdir'.
BASE_DIR = Path(__file__).resolve().parent.parent


# SECURITY WARNING: keep the secret key used in production secret!
SECRET_KEY = config('SECRET_KEY', default='django-insecure-default-key-change-in-production')

# SECURITY WARNING: don't run with debug turned on in production!
DEBUG = config('DEBUG', default=True, cast=bool)

# Validate required environment variables (only for production)
if not DEBUG:
    required_env_vars = ['DB_NAME', 'DB_USER', 'DB_PASSWORD', 'DB_HOST', 'DB_PORT']
    missing_vars = [var for var in required_env_vars if not config(var, default=None)]
    if missing_vars:
        raise ValueError(f"Missing required environment variables: {', '.join(missing_vars)}")

ALLOWED_HOSTS = ['127.0.0.1', 'localhost']


# Application definition

INSTALLED_APPS = [
    'django.contrib.admin',
    'django.contrib.auth',
    'django.contrib.contenttypes',
    'django.contrib.sessions',
    'django.contrib.messages',
    'django.contrib.staticfiles',

    # Third party apps
    'rest_framework',

    # Local apps
    'approximation',
    'experiments',
]

MIDDLEWARE = [
    'django.middleware.security.SecurityMiddleware',
    'django.contrib.sessions.middleware.SessionMiddleware',
    'django.middleware.common.CommonMiddleware',
    'django.middleware.csrf.CsrfViewMiddleware',
    'django.contrib.auth.middleware.AuthenticationMiddleware',
    'django.contrib.messages.middleware.MessageMiddleware',
    'django.middleware.clickjacking.XFrameOptionsMiddleware',
]

ROOT_URLCONF = 'koopman_lab.urls'

TEMPLATES = [
    {
        'BACKEND': 'django.template.backends.django.DjangoTemplates',
        'DIRS': [],
        'APP_DIRS': True,
        'OPTIONS': {
            'context_processors': [
                'django.template.context_processors.debug',
                'django.template.context_processors.request',
                'django.contrib.auth.context_processors.auth',
                'django.contrib.messages.context_processors.messages',
            ],
        },
    },
]

WSGI_APPLICATION = 'koopman_lab.wsgi.application'

# Database
# https://docs.djangoproject.com/en/5.2/ref/settings/#databases

DATABASES = {
    'default': {
        'ENGINE': 'django.db.backends.sqlite3' if DEBUG else 'django.db.backends.postgresql',
        'NAME': BASE_DIR / 'db.sqlite3' if DEBUG else config('DB_NAME'),
        'USER': '' if DEBUG else config('DB_USER'),
        'PASSWORD': '' if DEBUG else config('DB_PASSWORD'),
        'HOST': '' if DEBUG else config('DB_HOST'),
        'PORT': '' if DEBUG else config('DB_PORT'),
    }
}

# Internationalization

LANGUAGE_CODE = 'en-us'

TIME_ZONE = 'UTC'

USE_I18N = True

USE_TZ = True

# Static files (admin only)
STATIC_URL = '/static/'
STATIC_ROOT = BASE_DIR / "staticfiles"

DEFAULT_AUTO_FIELD = 'django.db.models.BigAutoField'

# REST Framework settings (serializers are used for config validation only)
REST_FRAMEWORK = {
    'DEFAULT_PERMISSION_CLASSES': (
        'rest_framework.permissions.IsAdminUser',
    ),
}

# Numerical settings
KOOPMAN = {
    'THREADS': config('KB_THREADS', default=1, cast=int),
    'MODULUS_RESOLUTION_1D': config('KOOPMAN_MODULUS_RESOLUTION_1D', default=256, cast=int),
    'MODULUS_RESOLUTION_2D': config('KOOPMAN_MODULUS_RESOLUTION_2D', default=96, cast=int),
    'IMAGE_RESOLUTION_2D': config('KOOPMAN_IMAGE_RESOLUTION_2D', default=64, cast=int),
    'LIPSCHITZ_RESOLUTION': config('KOOPMAN_LIPSCHITZ_RESOLUTION', default=128, cast=int),
    'RK4_STEPS_PER_UNIT_TIME': config('KOOPMAN_RK4_STEPS_PER_UNIT_TIME', default=300, cast=int),
    'PINV_TOLERANCE': config('KOOPMAN_PINV_TOLERANCE', default=1e-10, cast=float),
    'HULL_TOLERANCE': config('KOOPMAN_HULL_TOLERANCE', default=1e-6, cast=float),
    'BOX_TOLERANCE': config('KOOPMAN_BOX_TOLERANCE', default=1e-12, cast=float),
    'GRADIENT_TOLERANCE': config('KOOPMAN_GRADIENT_TOLERANCE', default=1e-5, cast=float),
    'MODULUS_INFLATION': config('KOOPMAN_MODULUS_INFLATION', default=1, cast=int),
    'EVALUATION_GRID_1D': config('KOOPMAN_EVALUATION_GRID_1D', default=1001, cast=int),
    'EVALUATION_GRID_2D': config('KOOPMAN_EVALUATION_GRID_2D', default=121, cast=int),
}

# Logging
LOG_LEVEL = config('KOOPMAN_LOG_LEVEL', default='INFO')

LOGGING = {
    'version': 1,
    'disable_existing_loggers': False,
    'formatters': {
        'verbose': {
            'format': '{asctime} {levelname} {name}: {message}',
            'style': '{',
        },
    },
    'handlers': {
        'console': {
            'class': 'logging.StreamHandler',
            'formatter': 'verbose',
        },
    },
    'loggers': {
        'approximation': {
            'handlers': ['console'],
            'level': LOG_LEVEL,
            'propagate': False,
        },
        'experiments': {
            'handlers': ['console'],
            'level': LOG_LEVEL,
            'propagate': False,
        },
    },
}

"""
WSGI config for koopman_lab (serves the admin for browsing recorded runs).
"""

import os

from django.core.wsgi import get_wsgi_application

os.environ.setdefault('DJANGO_SETTINGS_MODULE', 'koopman_lab.settings')

application = get_wsgi_application()

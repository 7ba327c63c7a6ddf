"""
URL configuration for koopman_lab.

Only the admin is exposed; it lists recorded experiment runs and bound reports.
"""
from django.contrib import admin
from django.urls import path

urlpatterns = [
    path('admin/', admin.site.urls),
]

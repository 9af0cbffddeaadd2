import os

import django

os.environ.setdefault('DJANGO_SETTINGS_MODULE', 'rigidgerms_project.settings')
django.setup()

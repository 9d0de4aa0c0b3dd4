# backend/app/models/__init__.py
# Network modules are imported directly from their files
# (e.g. from app.models.unisolver import UnisolverModel) to avoid import cycles.

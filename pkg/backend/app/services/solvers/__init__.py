# backend/app/services/solvers/__init__.py

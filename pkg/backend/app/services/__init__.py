# backend/app/services/__init__.py
# Services are imported from their modules directly, e.g.
# from app.services.training_service import TrainingService

from django.urls import path, include
from rest_framework.routers import DefaultRouter


from .views import PublishedMemoryViewSet, ToolkitViewSet

router = DefaultRouter()
router.register(r'memories', PublishedMemoryViewSet, basename='memory')
router.register(r'toolkit', ToolkitViewSet, basename='toolkit')

urlpatterns = [
    path('', include(router.urls)), # URLS para el router /api/memories/ y /api/toolkit/
]
